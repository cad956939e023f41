"""Domain types and state constructors.

Quadratures are ordered ``(x_c, p_c, x_m, p_m)``: cavity mode first, then
the mechanical mode. Covariance matrices use the convention

    sigma_jk = <r_j r_k + r_k r_j> - 2 R_j R_k

so the vacuum has ``sigma = I`` and the uncertainty relation reads
``sigma + i Omega >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, UnitError

#: Slack on the eigenvalues of ``sigma + i Omega`` in the physicality test.
EPS_PHYS = 1e-9

UNIT_SYSTEMS = ("dimensionless", "si")


def _frozen(a, shape):
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemParams:
    """Dynamical parameters of the cavity + nanosphere master equation.

    All five rates share one unit system. With ``units="dimensionless"``
    they are multiples of a reference frequency (usually the mechanical
    frequency itself); with ``units="si"`` they are angular frequencies in
    rad/s.
    """

    omega_m: float
    delta: float
    g: float
    kappa: float
    gamma: float
    units: str = "dimensionless"

    def rates(self) -> tuple[float, float, float, float, float]:
        return (self.omega_m, self.delta, self.g, self.kappa, self.gamma)

    def scaled(self, unit: float, units: str = "dimensionless") -> SystemParams:
        """Divide every rate by ``unit`` and relabel the unit system."""
        if unit <= 0:
            raise DomainError("scaling unit must be positive")
        return SystemParams(*(r / unit for r in self.rates()), units=units)


@dataclass(frozen=True)
class MeasurementParams:
    """Monitoring configuration.

    eta1 is the efficiency of homodyne detection of the cavity output at
    local-oscillator phase ``phi`` (``phi=0`` monitors ``x_c``, ``phi=pi/2``
    monitors ``p_c``); eta2 is the efficiency of the direct position
    measurement of the sphere.
    """

    eta1: float = 0.0
    eta2: float = 0.0
    phi: float = 0.0

    @property
    def monitored(self) -> bool:
        return self.eta1 > 0 or self.eta2 > 0


UNMONITORED = MeasurementParams()


def symplectic_form(n_modes: int = 2) -> np.ndarray:
    """Block-diagonal symplectic form ``diag([[0, 1], [-1, 0]], ...)``."""
    omega = np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    omega.setflags(write=False)
    return omega


OMEGA = symplectic_form()


@dataclass(frozen=True)
class GaussianState:
    r_mean: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.shape != (4, 4):
            raise DomainError(f"covariance must be 4x4, got {sigma.shape}")
        # exact symmetry: keep the upper triangle
        sigma = np.triu(sigma) + np.triu(sigma, 1).T
        object.__setattr__(self, "sigma", _frozen(sigma, (4, 4)))
        object.__setattr__(self, "r_mean", _frozen(self.r_mean, (4,)))

    def is_physical(self, eps: float = EPS_PHYS) -> bool:
        return is_physical(self.sigma, eps)


@dataclass(frozen=True)
class MechanicalSummary:
    """Reduced mechanical covariance plus the figures of merit derived from it.

    ``delta_x`` (metres) is only set when SI parameters were supplied.
    """

    sigma_m: np.ndarray
    n_ph: float
    purity: float
    xi: float
    xi_db: float
    delta_x: float | None = None
    delta_x_vacuum: float | None = None

    @property
    def sub_vacuum_position(self) -> bool:
        return self.sigma_m[0, 0] < 1.0


def physicality_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Eigenvalues of the Hermitian matrix ``sigma + i Omega`` (ascending)."""
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0] // 2
    return np.linalg.eigvalsh(sigma + 1j * symplectic_form(n))


def is_physical(sigma: np.ndarray, eps: float = EPS_PHYS) -> bool:
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(sigma)):
        return False
    return bool(physicality_eigenvalues(sigma)[0] >= -eps)


def vacuum_state() -> GaussianState:
    return GaussianState(np.zeros(4), np.eye(4))


def thermal_state(n_cavity: float, n_mech: float) -> GaussianState:
    """Product thermal state with the given mean photon and phonon numbers."""
    if n_cavity < 0 or n_mech < 0:
        raise DomainError(
            f"occupations must be non-negative, got n_cavity={n_cavity}, n_mech={n_mech}"
        )
    vc, vm = 2 * n_cavity + 1, 2 * n_mech + 1
    return GaussianState(np.zeros(4), np.diag([vc, vc, vm, vm]))


def validate(
    params: SystemParams, meas: MeasurementParams = UNMONITORED
) -> tuple[SystemParams, MeasurementParams]:
    """Check parameter invariants and return the pair with ``phi`` in [0, pi).

    Raises
    ------
    DomainError
        If a rate or efficiency is out of range.
    UnitError
        If the unit flag is not recognised.
    """
    if params.units not in UNIT_SYSTEMS:
        raise UnitError(f"unknown unit system {params.units!r}; expected one of {UNIT_SYSTEMS}")
    for name in ("omega_m", "delta", "g", "kappa", "gamma"):
        value = getattr(params, name)
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")
    if params.omega_m <= 0:
        raise DomainError(f"omega_m must be positive, got {params.omega_m}")
    for name in ("g", "kappa", "gamma"):
        if getattr(params, name) < 0:
            raise DomainError(f"{name} must be non-negative, got {getattr(params, name)}")
    for name in ("eta1", "eta2"):
        eta = getattr(meas, name)
        if not 0.0 <= eta <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {eta}")
    if not math.isfinite(meas.phi):
        raise DomainError(f"phi must be finite, got {meas.phi}")
    phi = math.fmod(meas.phi, math.pi)
    if phi < 0:
        phi += math.pi
    if phi >= math.pi:
        phi = 0.0
    return params, replace(meas, phi=phi)
