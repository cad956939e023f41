"""Existence of steady states.

The unconditional moment equations have a steady state iff the drift matrix
is Hurwitz. The conditional Riccati equation has a stabilizing solution iff
the pair ``(B, At)`` is detectable: every eigenvector of ``At`` whose
eigenvalue is not strictly in the left half-plane must be seen by ``B``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .matrices import drift_matrix

EPS_STAB = 1e-10
EPS_DET = 1e-8

# eigenvector matrices worse-conditioned than this are treated as defective
_DEFECTIVE_COND = 1e8


@dataclass(frozen=True)
class StabilityVerdict:
    is_stable: bool
    spectral_abscissa: float
    eigenvalues: tuple[complex, ...]


def _eigvals(a):
    try:
        ev = np.linalg.eigvals(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise NumericalError("eigenvalue computation produced non-finite values")
    return ev


def is_hurwitz(a: np.ndarray, eps: float = EPS_STAB) -> StabilityVerdict:
    """Hurwitz test; marginal eigenvalues (``|Re| <= eps``) count as unstable."""
    ev = _eigvals(np.asarray(a, dtype=float))
    ev = ev[np.argsort(-ev.real, kind="stable")]
    abscissa = float(ev.real[0])
    return StabilityVerdict(
        is_stable=abscissa < -eps,
        spectral_abscissa=abscissa,
        eigenvalues=tuple(complex(z) for z in ev),
    )


def _pbh_rank_ok(a, b, lam, eps):
    n = a.shape[0]
    stacked = np.vstack([a - lam * np.eye(n), b.astype(complex)])
    smin = np.linalg.svd(stacked, compute_uv=False)[-1]
    scale = max(1.0, np.linalg.norm(a, 2))
    return smin > eps * scale


def is_detectable(
    b: np.ndarray, a_tilde: np.ndarray, eps_stab: float = EPS_STAB, eps_det: float = EPS_DET
) -> bool:
    """Detectability of ``(B, At)``.

    Uses the eigenvector form of the test. When the eigenvector matrix is
    (nearly) defective the eigenvectors are unreliable, and the rank of
    ``[At - lam I; B]`` is checked instead for every non-decaying ``lam``.
    """
    a = np.asarray(a_tilde, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        ev, vecs = scipy.linalg.eig(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    unstable = ev.real >= -eps_stab
    if not np.any(unstable):
        return True
    if np.linalg.cond(vecs) > _DEFECTIVE_COND:
        return all(_pbh_rank_ok(a, b, lam, eps_det) for lam in ev[unstable])
    for lam, x in zip(ev[unstable], vecs.T[unstable]):
        if np.linalg.norm(b @ x) <= eps_det * np.linalg.norm(x):
            return False
    return True


def _map_row(args):
    delta, g_grid, kappa, gamma, omega_m = args
    return [is_hurwitz(drift_matrix(omega_m, delta, g, kappa)).is_stable for g in g_grid]


def stability_map(delta_grid, g_grid, kappa, gamma, omega_m=1.0, workers=None) -> np.ndarray:
    """Boolean matrix; entry ``(i, j)`` is the Hurwitz verdict at ``(delta_i, g_j)``.

    ``gamma`` does not enter the drift matrix; it is accepted so the call
    mirrors the full parameter set of the scan.
    """
    delta_grid = list(delta_grid)
    g_grid = list(g_grid)
    if not delta_grid or not g_grid:
        raise ValueError("stability_map needs non-empty grids")
    jobs = [(d, g_grid, kappa, gamma, omega_m) for d in delta_grid]
    workers = workers if workers is not None else int(os.environ.get("NANOSPHERE_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_map_row, jobs))
    else:
        rows = [_map_row(job) for job in jobs]
    return np.array(rows, dtype=bool)
