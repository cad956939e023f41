"""Cavity-trapped nanosphere: from geometry and laser power to rates.

The sphere sits in the standing wave of a high-finesse cavity, so the trap
frequency, the optomechanical coupling and the recoil heating all depend on
the intracavity photon number, which in turn depends on the detuning:

    n_c     = (kappa/2) P_in / (2 hbar omega_L) / (kappa^2/4 + Delta^2)
    omega_m = sqrt(2 hbar k^2 A n_c / m)
    g       = sqrt(hbar k^2 A^2 n_c / (2 m omega_m))
    Gamma   = gamma_ratio * omega_m

``A`` is the cavity frequency shift per unit intracavity intensity,
``A = (3 V_s / 4 V_c) (eps_r - 1)/(eps_r + 2) omega_L`` with the
standing-wave mode volume ``V_c = pi w^2 L / 4``. Setting
``mode_volume="beam"`` uses ``(3 V_s / 2 V_m)`` with
``V_m = pi w^2 L`` instead, which halves ``A``.

All rates here are angular frequencies in rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar as HBAR

from .errors import DomainError
from .model import SystemParams

MODE_VOLUMES = ("standing-wave", "beam")


@dataclass(frozen=True)
class ExperimentConfig:
    radius: float = 200e-9
    mass: float = 7.35e-17
    wavelength: float = 1064e-9
    cavity_length: float = 13e-3
    finesse: float = 4.0e5
    waist: float = 60e-6
    epsilon_r: float = 2.1
    input_power: float | None = None
    kappa_total: float | None = None
    gamma_ratio: float = 0.15
    mode_volume: str = "standing-wave"

    def __post_init__(self):
        for name in ("radius", "mass", "wavelength", "cavity_length", "waist"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.finesse > 1:
            raise DomainError(f"finesse must exceed 1, got {self.finesse}")
        if not self.epsilon_r > 1:
            raise DomainError(f"epsilon_r must exceed 1, got {self.epsilon_r}")
        if not self.gamma_ratio >= 0:
            raise DomainError(f"gamma_ratio must be non-negative, got {self.gamma_ratio}")
        if self.input_power is not None and not self.input_power > 0:
            raise DomainError(f"input_power must be positive, got {self.input_power}")
        if self.kappa_total is not None and not self.kappa_total > 0:
            raise DomainError(f"kappa_total must be positive, got {self.kappa_total}")
        if self.mode_volume not in MODE_VOLUMES:
            raise DomainError(f"mode_volume must be one of {MODE_VOLUMES}")

    @property
    def omega_c(self) -> float:
        """Cavity resonance (rad/s)."""
        return 2 * math.pi * SPEED_OF_LIGHT / self.wavelength

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def calibrated(self) -> bool:
        return self.input_power is not None


@dataclass(frozen=True)
class OperatingPoint:
    n_c: float
    omega_m: float
    g: float
    gamma: float
    kappa: float
    delta: float

    def system_params(self) -> SystemParams:
        return SystemParams(self.omega_m, self.delta, self.g, self.kappa, self.gamma, units="si")

    def dimensionless(self, unit: float) -> SystemParams:
        """Rates divided by ``unit`` (typically the resonant trap frequency)."""
        return self.system_params().scaled(unit)


def intrinsic_loss(config: ExperimentConfig) -> float:
    """Mirror-limited loss rate ``kappa_0 = 2 pi c / (2 F L)``."""
    return 2 * math.pi * SPEED_OF_LIGHT / (2 * config.finesse * config.cavity_length)


def total_loss(config: ExperimentConfig) -> float:
    """``kappa_total`` if set, else ``kappa_0 + kappa_d`` with ``kappa_d = kappa_0``."""
    if config.kappa_total is not None:
        return config.kappa_total
    return 2 * intrinsic_loss(config)


def _polarizability_factor(epsilon_r):
    return (epsilon_r - 1) / (epsilon_r + 2)


def _volume_factor(config):
    v_sphere = 4 / 3 * math.pi * config.radius**3
    beam = math.pi * config.waist**2 * config.cavity_length
    if config.mode_volume == "standing-wave":
        return 3 * v_sphere / (4 * (beam / 4))
    return 3 * v_sphere / (2 * beam)


def frequency_shift(config: ExperimentConfig, delta: float = 0.0) -> float:
    """The coefficient ``A`` (rad/s) at laser frequency ``omega_c + delta``."""
    omega_l = config.omega_c + delta
    return _volume_factor(config) * _polarizability_factor(config.epsilon_r) * omega_l


def photon_number(config: ExperimentConfig, delta: float) -> float:
    if config.input_power is None:
        raise DomainError("input_power is not set; run calibrate() first")
    kappa = total_loss(config)
    omega_l = config.omega_c + delta
    if not omega_l > 0:
        raise DomainError("laser frequency omega_c + delta must be positive")
    return (kappa / 2) * config.input_power / (2 * HBAR * omega_l) / (kappa**2 / 4 + delta**2)


def coupling_constants(config: ExperimentConfig, n_c: float, delta: float = 0.0):
    """Trap frequency and optomechanical coupling ``(omega_m, g)`` in rad/s."""
    if not n_c > 0:
        raise DomainError("n_c must be positive; with no light there is no trap")
    a = frequency_shift(config, delta)
    k = config.wavenumber
    omega_m = math.sqrt(2 * HBAR * k**2 * a * n_c / config.mass)
    g = math.sqrt(HBAR * k**2 * a**2 * n_c / (2 * config.mass * omega_m))
    return omega_m, g


def calibrate(
    config: ExperimentConfig, target_omega_m0: float, target_g0: float | None = None
) -> ExperimentConfig:
    """Fix the input power so the resonant trap frequency equals ``target_omega_m0``.

    ``omega_m`` scales as the square root of the input power, so the power
    follows in closed form. If ``target_g0`` is also given, ``epsilon_r`` is
    first adjusted so the resonant coupling hits that value: at fixed trap
    frequency ``g0^2 = A omega_m0 / 4`` depends on the sphere only through
    the polarizability.
    """
    if not (target_omega_m0 > 0 and math.isfinite(target_omega_m0)):
        raise DomainError(f"target_omega_m0 must be positive, got {target_omega_m0}")
    if target_g0 is not None:
        if not (target_g0 > 0 and math.isfinite(target_g0)):
            raise DomainError(f"target_g0 must be positive, got {target_g0}")
        needed = 4 * target_g0**2 / target_omega_m0
        alpha = needed / (_volume_factor(config) * config.omega_c)
        if not 0 < alpha < 1:
            raise DomainError(
                f"g0={target_g0:.4g} rad/s is out of reach for this geometry "
                f"(needs (eps-1)/(eps+2)={alpha:.3g})"
            )
        config = replace(config, epsilon_r=(1 + 2 * alpha) / (1 - alpha))
    probe = replace(config, input_power=1.0)
    omega_probe, _ = coupling_constants(probe, photon_number(probe, 0.0))
    power = (target_omega_m0 / omega_probe) ** 2
    if not (power > 0 and math.isfinite(power)):
        raise DomainError(f"cannot reach omega_m0={target_omega_m0:.4g} rad/s")
    return replace(config, input_power=power)


def operating_point(config: ExperimentConfig, delta: float) -> OperatingPoint:
    n_c = photon_number(config, delta)
    omega_m, g = coupling_constants(config, n_c, delta)
    return OperatingPoint(
        n_c=n_c,
        omega_m=omega_m,
        g=g,
        gamma=config.gamma_ratio * omega_m,
        kappa=total_loss(config),
        delta=delta,
    )


def resonant_frequency(config: ExperimentConfig) -> float:
    """Trap frequency at zero detuning, the unit of the detuning axis."""
    return operating_point(config, 0.0).omega_m


REFERENCE_OMEGA_M0 = 2 * math.pi * 33e3
REFERENCE_G0 = 2 * math.pi * 20e3


def reference_setup(pin_coupling: bool = True) -> ExperimentConfig:
    """The 200 nm silica sphere in the 13 mm, F = 4e5 cavity.

    The power is calibrated to ``omega_m0 / 2 pi = 33 kHz``. With
    ``pin_coupling`` the polarizability is also calibrated so that
    ``g0 / 2 pi = 20 kHz``; otherwise ``epsilon_r = 2.1`` is kept and
    ``g0`` follows from the geometry.
    """
    config = ExperimentConfig()
    return calibrate(config, REFERENCE_OMEGA_M0, REFERENCE_G0 if pin_coupling else None)
