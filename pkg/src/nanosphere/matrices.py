"""Drift, diffusion and measurement matrices of the moment equations.

Unconditional dynamics::

    dR/dt     = A R
    dsigma/dt = A sigma + sigma A^T + D

Conditional dynamics under cavity homodyne + position monitoring::

    dR        = A R dt + (N - sigma B^T) dw / sqrt(2)
    dsigma/dt = At sigma + sigma At^T - sigma B^T B sigma + Dt

with ``At = A + N B`` and ``Dt = D - N N^T``. ``B`` and ``N`` are kept as
full 4x4 matrices, so ``dw`` has four components; the third is always
inert and the homodyne block has rank one, leaving two active channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import UNMONITORED, MeasurementParams, SystemParams, validate


@dataclass(frozen=True)
class UnconditionalMatrices:
    a: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class ConditionalMatrices:
    a_tilde: np.ndarray
    d_tilde: np.ndarray
    b: np.ndarray
    n: np.ndarray
    a: np.ndarray
    d: np.ndarray


def drift_matrix(omega_m: float, delta: float, g: float, kappa: float) -> np.ndarray:
    """Drift matrix without parameter validation (negative ``g`` allowed)."""
    return np.array(
        [
            [-kappa / 2, -delta, 0.0, 0.0],
            [delta, -kappa / 2, -2 * g, 0.0],
            [0.0, 0.0, 0.0, omega_m],
            [-2 * g, 0.0, -omega_m, 0.0],
        ]
    )


def diffusion_matrix(kappa: float, gamma: float) -> np.ndarray:
    return np.diag([kappa, kappa, 0.0, 4 * gamma])


def measurement_matrices(
    kappa: float, gamma: float, eta1: float, eta2: float, phi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(B, N)`` for the given efficiencies and homodyne phase."""
    c, s = math.cos(phi), math.sin(phi)
    h = math.sqrt(eta1 * kappa)
    homodyne = h * np.array([[c * c, -s * c], [-s * c, s * s]])
    b = np.zeros((4, 4))
    b[:2, :2] = homodyne
    b[3, 2] = math.sqrt(4 * eta2 * gamma)
    n = np.zeros((4, 4))
    n[:2, :2] = homodyne
    return b, n


def build_unconditional(params: SystemParams) -> UnconditionalMatrices:
    params, _ = validate(params)
    return UnconditionalMatrices(
        a=drift_matrix(params.omega_m, params.delta, params.g, params.kappa),
        d=diffusion_matrix(params.kappa, params.gamma),
    )


def build_conditional(
    params: SystemParams, meas: MeasurementParams = UNMONITORED
) -> ConditionalMatrices:
    params, meas = validate(params, meas)
    un = build_unconditional(params)
    b, n = measurement_matrices(params.kappa, params.gamma, meas.eta1, meas.eta2, meas.phi)
    return ConditionalMatrices(
        a_tilde=un.a + n @ b,
        d_tilde=un.d - n @ n.T,
        b=b,
        n=n,
        a=un.a,
        d=un.d,
    )
