"""Steady-state covariances and the noise-cancelling feedback gain."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import NumericalError, StabilityError
from .matrices import ConditionalMatrices
from .model import OMEGA
from .stability import EPS_STAB, StabilityVerdict, is_detectable, is_hurwitz

#: Relative residual every returned steady state must satisfy.
TOL_SS = 1e-10


@dataclass(frozen=True)
class SteadyState:
    sigma: np.ndarray
    residual: float
    iterations: int
    method: str


@dataclass(frozen=True)
class FeedbackGain:
    """Gain ``F`` with ``Omega F = -(N - sigma B^T)``.

    The Hamiltonian term ``r^T f`` with ``f dt = F dy`` removes the noise
    from the first-moment equation when the record increment is
    ``dy = dw / sqrt(2) - B R dt``. The resulting closed-loop drift
    ``A - Omega F B`` equals ``At - sigma B^T B``.
    """

    f_map: np.ndarray
    closed_loop: np.ndarray
    verdict: StabilityVerdict


def _sym(x):
    return 0.5 * (x + x.T)


def _scale(*terms):
    n = max(np.linalg.norm(t) for t in terms)
    return n if n > 0 else 1.0


def lyapunov_residual(a, sigma, d) -> float:
    """Norm of ``A sigma + sigma A^T + D`` relative to its largest term."""
    drift = a @ sigma
    r = drift + drift.T + d
    return float(np.linalg.norm(r) / _scale(d, drift))


def riccati_residual(cm: ConditionalMatrices, sigma) -> float:
    """Norm of the Riccati left-hand side relative to its largest term.

    For moderate covariances the scale is ``|D|``; near-undetectable
    instances have huge covariances and the quadratic and drift terms set
    the attainable floating-point accuracy instead.
    """
    bb = cm.b.T @ cm.b
    drift = cm.a_tilde @ sigma
    quad = sigma @ bb @ sigma
    r = drift + drift.T - quad + cm.d_tilde
    return float(np.linalg.norm(r) / _scale(cm.d, drift, quad))


def _lyap(a, q):
    # solves a X + X a^T + q = 0
    return _sym(scipy.linalg.solve_continuous_lyapunov(a, -q))


_EYE4 = np.eye(4)


def _lyap_kron(a, q):
    # a X + X a^T + q = 0 through the 16x16 Kronecker system; cheap for 4x4
    n = a.shape[0]
    eye = _EYE4 if n == 4 else np.eye(n)
    k = (a[:, None, :, None] * eye[None, :, None, :]
         + eye[:, None, :, None] * a[None, :, None, :]).reshape(n * n, n * n)
    return _sym(np.linalg.solve(k, -q.ravel()).reshape(n, n))


def solve_lyapunov(a, d) -> SteadyState:
    """Steady state of ``dsigma/dt = A sigma + sigma A^T + D``.

    Raises
    ------
    StabilityError
        If ``A`` is not Hurwitz (marginal cases included).
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    verdict = is_hurwitz(a)
    if not verdict.is_stable:
        raise StabilityError(
            f"drift matrix is not Hurwitz (spectral abscissa {verdict.spectral_abscissa:.3g})"
        )
    sigma = _lyap(a, d)
    it = 1
    residual = lyapunov_residual(a, sigma, d)
    # iterative refinement; near-marginal drifts give huge, ill-conditioned
    # solutions that need a few passes
    while residual > 1e-3 * TOL_SS and it < 5:
        try:
            sigma = _sym(sigma + _lyap_kron(a, a @ sigma + sigma @ a.T + d))
        except np.linalg.LinAlgError:
            break
        residual = lyapunov_residual(a, sigma, d)
        it += 1
    if not np.all(np.isfinite(sigma)) or residual > TOL_SS:
        raise NumericalError(f"Lyapunov solve failed (relative residual {residual:.3g})")
    return SteadyState(sigma, residual, it, "bartels-stewart")


def _newton(cm, sigma, max_iter=50):
    """Newton-Kleinman iterations; ``sigma`` must be stabilizing."""
    bb = cm.b.T @ cm.b
    best, best_res = sigma, riccati_residual(cm, sigma)
    prev = best_res
    it = 0
    while it < max_iter and best_res > 1e-3 * TOL_SS:
        it += 1
        closed = cm.a_tilde - sigma @ bb
        try:
            sigma = _lyap_kron(closed, sigma @ bb @ sigma + cm.d_tilde)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(sigma)):
            break
        res = riccati_residual(cm, sigma)
        if res < best_res:
            best, best_res = sigma, res
        # quadratic convergence has stopped paying off
        if res > 0.5 * prev and best_res < 1e-2 * TOL_SS:
            break
        prev = res
    return best, best_res, it


def _is_stabilizing(cm, sigma) -> bool:
    closed = cm.a_tilde - sigma @ (cm.b.T @ cm.b)
    try:
        ev = np.linalg.eigvals(closed)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.isfinite(ev)) and ev.real.max() < -EPS_STAB)


def _riccati_flow(cm, sigma0, tol=1e-11, max_chunks=25):
    """Integrate the Riccati ODE until ``|dsigma/dt|`` is negligible."""
    bb = cm.b.T @ cm.b
    at, dt_ = cm.a_tilde, cm.d_tilde
    scale = max(np.linalg.norm(at, 2), np.linalg.norm(bb, 2), 1e-300)

    def rhs(_, y):
        s = y.reshape(4, 4)
        return (at @ s + s @ at.T - s @ bb @ s + dt_).ravel()

    y = np.asarray(sigma0, dtype=float).ravel()
    chunk = 20.0 / scale
    t = 0.0
    for _ in range(max_chunks):
        sol = solve_ivp(rhs, (t, t + chunk), y, method="LSODA", rtol=1e-10, atol=1e-12)
        if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
            raise NumericalError(f"Riccati flow integration failed: {sol.message}")
        y = sol.y[:, -1]
        t += chunk
        rate = np.linalg.norm(rhs(t, y)) / _scale(cm.d, at @ y.reshape(4, 4))
        if rate < tol:
            return _sym(y.reshape(4, 4)), t
        chunk *= 1.5
    raise NumericalError(f"Riccati flow did not settle by t={t:.3g}")


def solve_riccati(
    cm: ConditionalMatrices, initial_guess=None, method: str = "auto"
) -> SteadyState:
    """Stabilizing solution of ``At S + S At^T - S B^T B S + Dt = 0``.

    ``method`` is ``"auto"`` (Newton-Kleinman from ``initial_guess`` if it is
    stabilizing, otherwise a Schur solve, falling back to the ODE flow),
    ``"direct"`` (as auto but without the slow ODE fallback) or ``"flow"``
    (integrate the Riccati ODE from the vacuum). Every route finishes with
    Newton refinement.

    Raises
    ------
    StabilityError
        If ``(B, At)`` is not detectable.
    NumericalError
        If no route reaches the residual tolerance with a stabilizing answer.
    """
    if method not in ("auto", "direct", "flow"):
        raise ValueError(f"unknown method {method!r}")

    if not cm.b.any() and method != "flow":
        # without monitoring the equation is linear; detectability reduces
        # to a Hurwitz drift
        try:
            ss = solve_lyapunov(cm.a_tilde, cm.d_tilde)
        except StabilityError as exc:
            raise StabilityError(f"(B, At) is not detectable: {exc}") from None
        return SteadyState(ss.sigma, riccati_residual(cm, ss.sigma), ss.iterations, "lyapunov")

    # A stabilizing solution can only exist for a detectable pair, so a
    # successful warm start makes the explicit test redundant.
    if method != "flow" and initial_guess is not None:
        found = _attempt(cm, "newton", initial_guess)
        if isinstance(found, SteadyState):
            return found
    if not is_detectable(cm.b, cm.a_tilde):
        raise StabilityError("(B, At) is not detectable; no stabilizing Riccati solution")

    routes = {"auto": ("schur", "flow"), "direct": ("schur",), "flow": ("flow",)}[method]
    last = None
    for route in routes:
        found = _attempt(cm, route, initial_guess)
        if isinstance(found, SteadyState):
            return found
        last = found
    raise NumericalError(f"Riccati solve failed: {last}")


def _attempt(cm, route, initial_guess):
    """One solver route followed by Newton polishing; returns the steady
    state or the exception explaining the failure."""
    try:
        if route == "newton":
            sigma, extra = _sym(np.asarray(initial_guess, dtype=float)), 0
            if not _is_stabilizing(cm, sigma):
                return NumericalError("initial guess is not stabilizing")
        elif route == "schur":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sigma = scipy.linalg.solve_continuous_are(
                    cm.a_tilde.T, cm.b.T, cm.d_tilde, np.eye(4)
                )
            sigma, extra = _sym(sigma), 1
        else:
            sigma, _ = _riccati_flow(cm, np.eye(4))
            extra = 1
    except (np.linalg.LinAlgError, ValueError, NumericalError) as exc:
        return exc
    if route != "newton" and not (np.all(np.isfinite(sigma)) and _is_stabilizing(cm, sigma)):
        return NumericalError(f"{route} route gave a non-stabilizing solution")
    sigma, residual, it = _newton(cm, sigma)
    if residual <= TOL_SS and _is_stabilizing(cm, sigma):
        return SteadyState(sigma, residual, it + extra, route)
    return NumericalError(f"{route} route stalled at relative residual {residual:.3g}")


def feedback_gain(sigma_ss, cm: ConditionalMatrices, symplectic=OMEGA) -> FeedbackGain:
    """Linear Markovian feedback that cancels the first-moment noise.

    A non-Hurwitz closed loop only triggers a warning; the gain is still
    returned together with the verdict.
    """
    sigma_ss = np.asarray(sigma_ss, dtype=float)
    noise = cm.n - sigma_ss @ cm.b.T
    # Omega^-1 = -Omega
    f_map = symplectic @ noise
    closed = cm.a - symplectic @ f_map @ cm.b
    verdict = is_hurwitz(closed)
    if not verdict.is_stable:
        warnings.warn(
            "closed-loop drift with feedback is not Hurwitz "
            f"(spectral abscissa {verdict.spectral_abscissa:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return FeedbackGain(f_map, closed, verdict)
