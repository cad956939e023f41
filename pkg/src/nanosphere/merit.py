"""Figures of merit of the mechanical mode.

All functions take the covariance in the ``vacuum = identity`` convention.
2x2 eigenvalues are computed in closed form from trace and determinant.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.constants import hbar as HBAR

from .errors import DomainError, UnitError
from .model import MechanicalSummary, SystemParams


def reduce_mechanical(sigma) -> np.ndarray:
    """Covariance of the mechanical mode alone (cavity traced out)."""
    sigma = np.asarray(sigma, dtype=float)
    return np.array([[sigma[2, 2], sigma[2, 3]], [sigma[2, 3], sigma[3, 3]]])


def phonon_number(sigma_m) -> float:
    """Mean phonon number ``(tr sigma_m - 2) / 4``.

    Valid for zero first moments; otherwise it is only a lower bound.
    """
    return (sigma_m[0, 0] + sigma_m[1, 1] - 2.0) / 4.0


def _det(sigma_m):
    return sigma_m[0, 0] * sigma_m[1, 1] - sigma_m[0, 1] * sigma_m[1, 0]


def purity(sigma_m) -> float:
    det = _det(sigma_m)
    if not det > 0:
        raise DomainError(f"covariance determinant must be positive, got {det}")
    return 1.0 / math.sqrt(det)


def eigenvalues_2x2(sigma_m) -> tuple[float, float]:
    """(smaller, larger) eigenvalue of a symmetric 2x2 matrix."""
    a, b, c = sigma_m[0, 0], sigma_m[0, 1], sigma_m[1, 1]
    mean = 0.5 * (a + c)
    radius = math.hypot(0.5 * (a - c), b)
    large = mean + radius
    det = a * c - b * b
    # det / large avoids cancellation when the small eigenvalue is tiny
    small = det / large if large > 0 else mean - radius
    return small, large


def squeezing(sigma_m) -> tuple[float, float]:
    """Minimum quadrature variance and its value in dB (negative = squeezed)."""
    xi, _ = eigenvalues_2x2(sigma_m)
    xi_db = 10.0 * math.log10(xi) if xi > 0 else float("nan")
    return xi, xi_db


def position_uncertainty(sigma_m, mass: float, omega_m: float, hbar: float = HBAR):
    """Position spread in metres and the vacuum value at the same frequency.

    ``omega_m`` is the mechanical angular frequency in rad/s and ``mass``
    in kg. The vacuum value is the zero-point spread ``sqrt(hbar / 2 m omega_m)``.
    """
    if mass is None or omega_m is None or not (mass > 0 and omega_m > 0):
        raise UnitError("position uncertainty needs a positive SI mass and frequency")
    var_dimless = sigma_m[0, 0] / 2.0
    delta_x = math.sqrt(hbar * var_dimless / (mass * omega_m))
    vacuum = math.sqrt(hbar * 0.5 / (mass * omega_m))
    return delta_x, vacuum


def summarize(
    sigma, params: SystemParams | None = None, mass: float | None = None
) -> MechanicalSummary:
    """Bundle every figure of merit for a 4x4 covariance.

    If ``mass`` is given, ``params`` must carry SI rates so that the
    position spread can be expressed in metres.
    """
    sigma_m = reduce_mechanical(sigma)
    xi, xi_db = squeezing(sigma_m)
    delta_x = vacuum = None
    if mass is not None:
        if params is None or params.units != "si":
            raise UnitError("delta_x requires SystemParams in SI units")
        delta_x, vacuum = position_uncertainty(sigma_m, mass, params.omega_m)
    sigma_m.setflags(write=False)
    return MechanicalSummary(
        sigma_m=sigma_m,
        n_ph=phonon_number(sigma_m),
        purity=purity(sigma_m),
        xi=xi,
        xi_db=xi_db,
        delta_x=delta_x,
        delta_x_vacuum=vacuum,
    )
