"""Time evolution of the moments.

The covariance follows a deterministic ODE (Lyapunov-type when unmonitored,
Riccati-type when monitored), integrated with exponential Euler steps. The
conditional first moments obey the linear SDE

    dR = A R dt + (N - sigma B^T) dw / sqrt(2),    <dw_j dw_k> = delta_jk dt,

integrated with an exponential Euler-Maruyama scheme: the drift over one
step is propagated exactly with ``expm(A dt)`` and the noise is added with
the covariance frozen at the start of the step.

Each trajectory draws its Wiener increments from its own stream, seeded by
``(seed, trajectory_index)``, so ensembles are reproducible regardless of
how they are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError
from .matrices import build_conditional
from .model import UNMONITORED, GaussianState, MeasurementParams, SystemParams
from .solvers import feedback_gain, solve_riccati

_OVERFLOW = 1e150
_CHUNK = 256


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    r_means: np.ndarray
    sigma_path: np.ndarray | None
    noise_seed: int | None
    feedback_enabled: bool
    trajectory_index: int = 0


@dataclass(frozen=True)
class EnsembleRecord:
    """Summary of many trajectories sharing one covariance path.

    ``r_final`` has shape ``(n_trajectories, 4)``; ``mean_r`` and
    ``mean_norm`` are ensemble averages at the recorded ``times``.
    """

    times: np.ndarray
    r_final: np.ndarray
    mean_r: np.ndarray
    mean_norm: np.ndarray
    sigma_final: np.ndarray
    noise_seed: int
    feedback_enabled: bool


def _steps(t_final, dt):
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not t_final >= dt:
        raise DomainError(f"t_final must be at least dt, got t_final={t_final}, dt={dt}")
    return int(round(t_final / dt))


def _rowmul(x, m):
    """``x @ m`` for a stack of 4-vectors, summed term by term so that each
    row's rounding does not depend on how many rows are batched."""
    return x[:, 0, None] * m[0] + x[:, 1, None] * m[1] + x[:, 2, None] * m[2] + x[:, 3, None] * m[3]


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


class _CovariancePath:
    """Exponential Euler stepping of the covariance ODE.

    The linear part ``A sigma + sigma A^T`` is propagated exactly and the
    remainder ``D - sigma B^T B sigma`` is frozen over each step. Free
    rotations are therefore exact and the fixed point of the map is the
    exact steady state; the scheme is first order in ``dt``.
    """

    def __init__(self, params, meas, sigma0, dt):
        cm = build_conditional(params, meas)
        self.cm = cm
        self.dt = dt
        self.monitored = meas.monitored
        self.drift = cm.a_tilde if self.monitored else cm.a
        self.diff = cm.d_tilde if self.monitored else cm.d
        self.bb = cm.b.T @ cm.b
        self.sigma = np.array(sigma0, dtype=float)
        eye = np.eye(4)
        lin = np.kron(self.drift, eye) + np.kron(eye, self.drift)
        aug = np.zeros((32, 32))
        aug[:16, :16] = lin * dt
        aug[:16, 16:] = np.eye(16) * dt
        prop = scipy.linalg.expm(aug)
        self.lin_prop, self.src_prop = prop[:16, :16], prop[:16, 16:]
        self.radius = max(abs(scipy.linalg.eigvals(cm.a))) if np.any(cm.a) else 0.0

    def rhs(self, s):
        out = self.drift @ s + s @ self.drift.T + self.diff
        if self.monitored:
            out -= s @ self.bb @ s
        return out

    def step(self):
        src = self.diff - self.sigma @ self.bb @ self.sigma if self.monitored else self.diff
        s = (self.lin_prop @ self.sigma.ravel() + self.src_prop @ src.ravel()).reshape(4, 4)
        s = 0.5 * (s + s.T)
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > _OVERFLOW:
            if self.radius * self.dt < 0.5:
                hint_msg = "the dynamics diverge (no steady state)"
            else:
                hint_msg = f"try a smaller step, e.g. dt={self.dt / 10:.3g}"
            raise NumericalError(f"covariance integration overflowed; {hint_msg}")
        self.sigma = s
        return s


def integrate_moments(
    initial: GaussianState,
    params: SystemParams,
    meas: MeasurementParams | None = None,
    t_final: float = 1.0,
    dt: float | None = None,
    record_every: int = 1,
) -> TrajectoryRecord:
    """Deterministic evolution of the covariance and of the mean.

    With ``meas`` omitted (or unmonitored) the covariance follows the
    Lyapunov ODE, otherwise the Riccati ODE. ``R`` follows ``dR/dt = A R``,
    i.e. the ensemble-averaged mean.
    """
    meas = meas or UNMONITORED
    dt = dt if dt is not None else default_dt(params)
    n = _steps(t_final, dt)
    path = _CovariancePath(params, meas, initial.sigma, dt)
    prop = scipy.linalg.expm(path.cm.a * dt)
    r = np.array(initial.r_mean, dtype=float)
    times, rs, sigmas = [0.0], [r.copy()], [path.sigma.copy()]
    for k in range(1, n + 1):
        s = path.step()
        r = prop @ r
        if k % record_every == 0 or k == n:
            times.append(k * dt)
            rs.append(r.copy())
            sigmas.append(s.copy())
    return TrajectoryRecord(np.array(times), np.array(rs), np.array(sigmas), None, False)


def default_dt(params: SystemParams) -> float:
    """A thousandth of a mechanical period."""
    return 1e-3 * 2 * math.pi / params.omega_m


def simulate_ensemble(
    initial: GaussianState,
    params: SystemParams,
    meas: MeasurementParams,
    t_final: float,
    dt: float | None = None,
    seed: int = 0,
    n_trajectories: int = 1,
    feedback: bool = False,
    record_every: int = 1,
    first_index: int = 0,
    keep_paths: bool = False,
):
    """Euler-Maruyama ensemble of conditional first-moment trajectories.

    With ``feedback=True`` the gain computed at the Riccati steady state is
    applied throughout; the noise then cancels exactly once the covariance
    has reached that steady state, and the mean relaxes with the
    closed-loop drift ``At - sigma B^T B``.

    Returns an :class:`EnsembleRecord`, plus the full ``(n_rec, M, 4)`` path
    array as a second value when ``keep_paths`` is set.
    """
    if n_trajectories < 1:
        raise DomainError("n_trajectories must be at least 1")
    dt = dt if dt is not None else default_dt(params)
    n = _steps(t_final, dt)
    path = _CovariancePath(params, meas, initial.sigma, dt)
    cm = path.cm

    drift = cm.a
    noise_offset = np.zeros((4, 4))
    if feedback and meas.monitored:
        ss = solve_riccati(cm)
        gain = feedback_gain(ss.sigma, cm)
        drift = gain.closed_loop
        noise_offset = cm.n - ss.sigma @ cm.b.T
    prop_t = scipy.linalg.expm(drift * dt).T
    noise_scale = math.sqrt(dt / 2)

    m = n_trajectories
    rngs = [trajectory_rng(seed, first_index + i) for i in range(m)]
    r = np.tile(np.asarray(initial.r_mean, dtype=float), (m, 1))
    times, mean_r, mean_norm = [0.0], [r.mean(axis=0)], [np.linalg.norm(r, axis=1).mean()]
    paths = [r.copy()] if keep_paths else None

    k = 0
    while k < n:
        block = min(_CHUNK, n - k)
        z = np.stack([g.standard_normal((block, 4)) for g in rngs], axis=1)
        for j in range(block):
            coupling = (cm.n - path.sigma @ cm.b.T) - noise_offset
            r = _rowmul(r, prop_t) + noise_scale * _rowmul(z[j], coupling.T)
            path.step()
            k += 1
            if k % record_every == 0 or k == n:
                times.append(k * dt)
                mean_r.append(r.mean(axis=0))
                mean_norm.append(np.linalg.norm(r, axis=1).mean())
                if keep_paths:
                    paths.append(r.copy())
        if not np.all(np.isfinite(r)):
            raise NumericalError("first-moment integration produced non-finite values")

    record = EnsembleRecord(
        times=np.array(times),
        r_final=r,
        mean_r=np.array(mean_r),
        mean_norm=np.array(mean_norm),
        sigma_final=path.sigma.copy(),
        noise_seed=seed,
        feedback_enabled=feedback,
    )
    if keep_paths:
        return record, np.array(paths)
    return record


def simulate_trajectory(
    initial: GaussianState,
    params: SystemParams,
    meas: MeasurementParams,
    t_final: float,
    dt: float | None = None,
    seed: int = 0,
    feedback: bool = False,
    record_every: int = 1,
    trajectory_index: int = 0,
) -> TrajectoryRecord:
    """One conditional trajectory; identical to member ``trajectory_index``
    of :func:`simulate_ensemble` with the same seed."""
    dt = dt if dt is not None else default_dt(params)
    record, paths = simulate_ensemble(
        initial, params, meas, t_final, dt, seed, 1, feedback,
        record_every=record_every, first_index=trajectory_index, keep_paths=True,
    )
    return TrajectoryRecord(
        times=record.times,
        r_means=paths[:, 0, :],
        sigma_path=None,
        noise_seed=seed,
        feedback_enabled=feedback,
        trajectory_index=trajectory_index,
    )
