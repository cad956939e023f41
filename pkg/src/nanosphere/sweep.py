"""Detuning sweeps, homodyne-phase optimization and stability scans."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NanosphereError, NumericalError, StabilityError
from .experiment import ExperimentConfig, operating_point, resonant_frequency
from .matrices import (
    ConditionalMatrices,
    build_conditional,
    build_unconditional,
    measurement_matrices,
)
from .merit import (
    phonon_number,
    position_uncertainty,
    purity,
    reduce_mechanical,
    squeezing,
    summarize,
)
from .model import MeasurementParams, SystemParams, validate
from .solvers import solve_lyapunov, solve_riccati
from .stability import is_detectable, is_hurwitz, stability_map

SCENARIOS = ("unconditional", "cavity-homodyne", "position-only", "both")
OBJECTIVES = ("n_ph", "purity", "squeezing", "delta_x")

PHASE_GRID = 64
PHASE_TOL = 1e-6
_GOLDEN = (math.sqrt(5) - 1) / 2


def default_detuning_grid() -> np.ndarray:
    """241 points over [-6, 6] in units of the (resonant) trap frequency."""
    return np.linspace(-6.0, 6.0, 241)


def _cost(objective, sigma):
    """Scalar to minimise for the given figure of merit."""
    sm = reduce_mechanical(sigma)
    if objective == "n_ph":
        return phonon_number(sm)
    if objective == "purity":
        return -purity(sm)
    if objective == "squeezing":
        return squeezing(sm)[0]
    return sm[0, 0]


def _report(objective, cost):
    return -cost if objective == "purity" else cost


def steady_covariance(
    params: SystemParams, meas: MeasurementParams, guess=None, method: str = "auto"
) -> np.ndarray:
    """Lyapunov steady state when unmonitored, Riccati steady state otherwise."""
    cm = build_conditional(params, meas)
    if not meas.monitored:
        return solve_lyapunov(cm.a, cm.d).sigma
    return solve_riccati(cm, initial_guess=guess, method=method).sigma


@dataclass(frozen=True)
class PhaseOptimum:
    phi: float
    value: float
    sigma: np.ndarray
    phase_relevant: bool


def optimize_phase(
    params: SystemParams, meas: MeasurementParams, objective: str = "n_ph"
) -> PhaseOptimum:
    """Homodyne phase in [0, pi) that optimises ``objective``.

    A 64-point grid locates the best basin, then golden-section search
    refines it to 1e-6 rad. Phases at which no steady state exists are
    skipped. ``value`` is the figure of merit itself (purity is maximised,
    the others minimised; for ``"delta_x"`` it is the dimensionless position
    variance ``sigma_33``).

    Raises
    ------
    StabilityError
        If no phase on the grid admits a steady state.
    """
    if objective not in OBJECTIVES:
        raise DomainError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    params, meas = validate(params, meas)
    if meas.eta1 == 0:
        sigma = steady_covariance(params, replace(meas, phi=0.0))
        return PhaseOptimum(0.0, _report(objective, _cost(objective, sigma)), sigma, False)

    un = build_unconditional(params)

    def evaluate(phi, guess):
        b, n = measurement_matrices(params.kappa, params.gamma, meas.eta1, meas.eta2, phi)
        cm = ConditionalMatrices(un.a + n @ b, un.d - n @ n.T, b, n, un.a, un.d)
        try:
            sigma = solve_riccati(cm, initial_guess=guess, method="direct").sigma
        except (StabilityError, NumericalError):
            return math.inf, None
        return _cost(objective, sigma), sigma

    grid = [math.pi * k / PHASE_GRID for k in range(PHASE_GRID)]
    best = (math.inf, None, None)
    guess = None
    for phi in grid:
        cost, sigma = evaluate(phi, guess)
        if sigma is not None:
            guess = sigma
        if cost < best[0]:
            best = (cost, phi, sigma)
    if best[1] is None:
        raise StabilityError("no homodyne phase admits a steady state")

    half = math.pi / PHASE_GRID
    lo, hi = best[1] - half, best[1] + half
    anchor = best[2]
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    (f1, s1), (f2, s2) = evaluate(x1 % math.pi, anchor), evaluate(x2 % math.pi, anchor)
    while hi - lo > PHASE_TOL:
        if f1 <= f2:
            hi, x2, f2, s2 = x2, x1, f1, s1
            x1 = hi - _GOLDEN * (hi - lo)
            f1, s1 = evaluate(x1 % math.pi, s2 if s2 is not None else anchor)
        else:
            lo, x1, f1, s1 = x1, x2, f2, s2
            x2 = lo + _GOLDEN * (hi - lo)
            f2, s2 = evaluate(x2 % math.pi, s1 if s1 is not None else anchor)
    for cost, phi, sigma in ((f1, x1, s1), (f2, x2, s2)):
        if cost < best[0]:
            best = (cost, phi, sigma)
    cost, phi, sigma = best
    return PhaseOptimum(phi % math.pi, _report(objective, cost), sigma, True)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep.

    Exactly one of ``system`` (dimensionless rates, detuning in units of
    ``omega_m``) or ``experiment`` (calibrated cavity setup, detuning in
    units of the resonant trap frequency ``omega_m0``) must be given. In
    the dimensionless mode ``g`` stays fixed along the sweep; in the
    experiment mode ``omega_m``, ``g`` and ``Gamma`` follow the photon
    number at each detuning.
    """

    deltas: tuple
    scenario: str = "unconditional"
    efficiencies: tuple = ((0.0, 0.0),)
    objective: str = "n_ph"
    system: SystemParams | None = None
    experiment: ExperimentConfig | None = None

    def __post_init__(self):
        deltas = tuple(float(x) for x in self.deltas)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(
            self, "efficiencies", tuple((float(a), float(b)) for a, b in self.efficiencies)
        )
        if not deltas:
            raise DomainError("detuning grid is empty")
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise DomainError("detuning grid must be strictly increasing")
        if (self.system is None) == (self.experiment is None):
            raise DomainError("give exactly one of system or experiment")
        if self.experiment is not None and not self.experiment.calibrated:
            raise DomainError("experiment config must be calibrated first")
        if self.scenario not in SCENARIOS:
            raise DomainError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.objective not in OBJECTIVES:
            raise DomainError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if not self.efficiencies:
            raise DomainError("at least one efficiency pair is required")
        for eta1, eta2 in self.efficiencies:
            if not (0 <= eta1 <= 1 and 0 <= eta2 <= 1):
                raise DomainError(f"efficiencies must lie in [0, 1], got {(eta1, eta2)}")
            if self.scenario == "unconditional" and (eta1 or eta2):
                raise DomainError("unconditional scenario requires eta1 = eta2 = 0")
            if self.scenario == "cavity-homodyne" and eta2:
                raise DomainError("cavity-homodyne scenario requires eta2 = 0")
            if self.scenario == "position-only" and eta1:
                raise DomainError("position-only scenario requires eta1 = 0")
        if self.system is not None:
            validate(self.system)

    @property
    def axis_unit(self) -> str:
        return "omega_m" if self.system is not None else "omega_m0"


@dataclass(frozen=True)
class SweepRow:
    """One detuning and one efficiency pair.

    Steady-state fields are ``None`` when no steady state exists (for
    instance an unmonitored, non-Hurwitz point); ``error`` then says why.
    """

    delta: float
    eta1: float
    eta2: float
    phi_opt: float | None
    n_ph: float | None
    purity: float | None
    xi: float | None
    xi_db: float | None
    stable: bool
    detectable: bool
    delta_x: float | None = None
    delta_x_vacuum: float | None = None
    omega_m: float | None = None
    g: float | None = None
    n_c: float | None = None
    error: str | None = None


def _row(task):
    delta_axis, eta1, eta2, objective, system, experiment, unit = task
    si = None
    if experiment is not None:
        op = operating_point(experiment, delta_axis * unit)
        params = op.dimensionless(unit)
        si = op
    else:
        params = replace(system, delta=delta_axis)
    extra = {}
    if si is not None:
        extra = {"omega_m": si.omega_m, "g": si.g, "n_c": si.n_c}
    meas = MeasurementParams(eta1, eta2, 0.0)
    cm = build_conditional(params, meas)
    stable = is_hurwitz(cm.a).is_stable
    empty = dict(phi_opt=None, n_ph=None, purity=None, xi=None, xi_db=None)
    try:
        opt = optimize_phase(params, meas, objective)
    except NanosphereError as exc:
        detectable = stable if not meas.monitored else False
        return SweepRow(delta_axis, eta1, eta2, stable=stable, detectable=detectable,
                        error=str(exc), **empty, **extra)
    cm_opt = build_conditional(params, replace(meas, phi=opt.phi))
    detectable = is_detectable(cm_opt.b, cm_opt.a_tilde)
    s = summarize(opt.sigma)
    dx = dx_vac = None
    if si is not None:
        dx, dx_vac = position_uncertainty(s.sigma_m, experiment.mass, si.omega_m)
    return SweepRow(
        delta=delta_axis, eta1=eta1, eta2=eta2,
        phi_opt=opt.phi if opt.phase_relevant else None,
        n_ph=s.n_ph, purity=s.purity, xi=s.xi, xi_db=s.xi_db,
        stable=stable, detectable=detectable,
        delta_x=dx, delta_x_vacuum=dx_vac, **extra,
    )


def _workers(workers):
    if workers is not None:
        return workers
    return int(os.environ.get("NANOSPHERE_WORKERS", "1"))


def detuning_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """Steady-state figures of merit along the detuning axis.

    Rows are ordered curve by curve (efficiency pair outer, detuning inner).
    Failures are recorded in the row and never abort the sweep. The output
    does not depend on ``workers``.
    """
    unit = resonant_frequency(spec.experiment) if spec.experiment is not None else 1.0
    tasks = [
        (d, eta1, eta2, spec.objective, spec.system, spec.experiment, unit)
        for eta1, eta2 in spec.efficiencies
        for d in spec.deltas
    ]
    workers = _workers(workers)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_row, tasks, chunksize=4))
    return [_row(t) for t in tasks]


@dataclass(frozen=True)
class DecoupledRow:
    gamma_ratio: float
    eta2: float
    n_ph: float
    purity: float
    xi: float
    xi_db: float
    sigma_m: np.ndarray


def decoupled_steady_state(gamma_ratio: float, eta2: float) -> np.ndarray:
    """Closed-form conditional covariance of the free oscillator (``g = 0``).

    With ``k = 4 eta2 Gamma`` the 2x2 Riccati equation in units of
    ``omega_m`` reduces to ``2 b + k b^2 = 4 Gamma``, ``a^2 = 2 b / k`` and
    ``c = a + k a b`` for ``sigma_m = [[a, b], [b, c]]``.
    """
    if not gamma_ratio > 0:
        raise DomainError(f"Gamma/omega_m must be positive, got {gamma_ratio}")
    if not 0 < eta2 <= 1:
        raise DomainError(f"eta2 must lie in (0, 1], got {eta2}")
    k = 4 * eta2 * gamma_ratio
    b = 4 * gamma_ratio / (1 + math.sqrt(1 + 4 * gamma_ratio * k))
    a = math.sqrt(2 * b / k)
    c = a + k * a * b
    return np.array([[a, b], [b, c]])


def decoupled_curves(gamma_over_omega_grid, eta2_list) -> list[DecoupledRow]:
    """Figures of merit of the monitored free oscillator, one row per (Gamma, eta2)."""
    rows = []
    for eta2 in eta2_list:
        for gr in gamma_over_omega_grid:
            sm = decoupled_steady_state(float(gr), float(eta2))
            full = np.eye(4)
            full[2:, 2:] = sm
            s = summarize(full)
            rows.append(DecoupledRow(float(gr), float(eta2), s.n_ph, s.purity, s.xi, s.xi_db, sm))
    return rows


@dataclass(frozen=True)
class StabilityTable:
    deltas: np.ndarray
    gs: np.ndarray
    stable: np.ndarray


def stability_scan(delta_grid, g_grid, kappa=2.0, gamma=0.1, omega_m=1.0, workers=None):
    """Hurwitz map over (detuning, coupling), rows indexed by detuning."""
    stable = stability_map(delta_grid, g_grid, kappa, gamma, omega_m, workers=_workers(workers))
    return StabilityTable(np.asarray(delta_grid, float), np.asarray(g_grid, float), stable)


def default_stability_grids():
    """Detuning in [-6, 6] and coupling in [0, 3], both in steps of 0.05."""
    return np.linspace(-6.0, 6.0, 241), np.linspace(0.0, 3.0, 61)
