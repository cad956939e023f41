"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL summary line (printed at the end of the run
under "acceptance criteria") before asserting, so a failing criterion still
reports what was measured.
"""

import math
import time

import numpy as np
import oracles
import pytest

from nanosphere import (
    ExperimentConfig,
    GaussianState,
    MeasurementParams,
    StabilityError,
    SystemParams,
    build_conditional,
    calibrate,
    intrinsic_loss,
    is_detectable,
    is_hurwitz,
    is_physical,
    lyapunov_residual,
    operating_point,
    reference_setup,
    riccati_residual,
    simulate_ensemble,
    solve_lyapunov,
    solve_riccati,
    stability_map,
)
from nanosphere.experiment import REFERENCE_OMEGA_M0, resonant_frequency
from nanosphere.merit import phonon_number, purity, reduce_mechanical, squeezing
from nanosphere.solvers import TOL_SS
from nanosphere.sweep import SweepSpec, default_detuning_grid, default_stability_grids, detuning_sweep

FIG = SystemParams(1, 0, 1, 2, 0.1)
TWO_PI = 2 * math.pi


def _runs(mask):
    """Number of maximal runs of True in a 1-d boolean array."""
    m = np.concatenate([[False], mask, [False]]).astype(int)
    return int(np.sum(np.diff(m) == 1))


def _best(rows, key):
    rows = [r for r in rows if getattr(r, key) is not None]
    return min(rows, key=lambda r: getattr(r, key))


def test_criterion_1_stability_map(report):
    t0 = time.perf_counter()
    deltas, gs = default_stability_grids()
    m = stability_map(deltas, gs, 2.0, 0.1)
    blue_clear = not m[deltas >= 0].any()
    resonance_clear = not m[np.isclose(deltas, 0.0)].any()
    runs = {g: _runs(m[:, j]) for j, g in enumerate(gs) if g > 0}
    split = sorted(g for g, n in runs.items() if n > 1)
    contiguous = not split

    rng = np.random.default_rng(2024)
    cells = [(rng.integers(len(deltas)), rng.integers(len(gs))) for _ in range(50)]
    disagree = []
    for i, j in cells:
        a = oracles.drift(1, deltas[i], gs[j], 2)
        if oracles.lyapunov_converges(a, oracles.diffusion(2, 0.1)) != m[i, j]:
            disagree.append((deltas[i], gs[j]))
    elapsed = time.perf_counter() - t0

    ok = blue_clear and resonance_clear and contiguous and not disagree and elapsed < 30
    detail = (f"(a) no stable cell for delta>=0: {blue_clear}; (b) delta=0 column unstable: "
              f"{resonance_clear}; (c) contiguous stable set in every g>0 row: {contiguous}")
    if split:
        detail += f" [{len(split)} rows split, g in {split[0]:.2f}..{split[-1]:.2f}]"
    detail += f"; oracle disagreements {len(disagree)}/50; {elapsed:.1f}s"
    report(1, "stability map", ok, detail)
    assert blue_clear and resonance_clear
    assert not disagree
    assert elapsed < 30
    assert contiguous, f"stable detuning set is split for g in {split}"


def test_criterion_2_unconditional_sweep(report):
    t0 = time.perf_counter()
    rows = detuning_sweep(SweepSpec(default_detuning_grid(), "unconditional", system=FIG))
    elapsed = time.perf_counter() - t0
    far = rows[0]
    stable = [r for r in rows if r.n_ph is not None]
    d_n = min(stable, key=lambda r: r.n_ph).delta
    d_mu = max(stable, key=lambda r: r.purity).delta
    ok = (far.n_ph is not None and abs(far.n_ph - 8) <= 0.25 * 8 and d_n != d_mu and elapsed < 5)
    report(2, "unconditional steady state", ok,
           f"n_ph(delta={far.delta:g}) = {far.n_ph:.3f} (8 +/- 25%); argmin n_ph at {d_n:.2f}, "
           f"argmax purity at {d_mu:.2f}; {elapsed:.1f}s")
    assert far.n_ph == pytest.approx(8, rel=0.25)
    assert d_n != d_mu
    assert elapsed < 5


def test_criterion_3_cavity_homodyne(report):
    t0 = time.perf_counter()
    rows = detuning_sweep(SweepSpec(default_detuning_grid(), "cavity-homodyne", ((1.0, 0.0),),
                                    "squeezing", system=FIG))
    elapsed = time.perf_counter() - t0
    best = _best(rows, "xi_db")
    ok = abs(best.xi_db + 3) <= 0.5 and abs(best.delta + 2.5) <= 0.5 and elapsed < 30
    report(3, "cavity homodyne squeezing", ok,
           f"best {best.xi_db:.2f} dB at delta = {best.delta:.2f} (-3 +/- 0.5 dB near -2.5 +/- 0.5); "
           f"{elapsed:.1f}s")
    assert best.xi_db == pytest.approx(-3, abs=0.5)
    assert best.delta == pytest.approx(-2.5, abs=0.5)
    assert elapsed < 30


def test_criterion_4_decoupled_limit(report):
    t0 = time.perf_counter()
    errors = []
    for eta2 in (0.2, 0.5, 0.8, 1.0):
        cm = build_conditional(SystemParams(1, -2, 0, 2, 0.1), MeasurementParams(0, eta2, 0))
        sm = reduce_mechanical(solve_riccati(cm).sigma)
        errors.append(abs(purity(sm) - math.sqrt(eta2)))
        if eta2 == 1.0:
            n_ph, xi_db = phonon_number(sm), squeezing(sm)[1]
    elapsed = time.perf_counter() - t0
    purity_ok = max(errors) < 1e-6
    n_ok = abs(n_ph - 0.02) <= 0.5 * 0.02
    xi_ok = abs(xi_db + 1) <= 0.5
    ok = purity_ok and n_ok and xi_ok and elapsed < 5
    report(4, "decoupled oscillator", ok,
           f"max |purity - sqrt(eta2)| = {max(errors):.1e}; n_ph(eta2=1, Gamma=0.1) = {n_ph:.4f} "
           f"(0.02 +/- 50%: {n_ok}); xi = {xi_db:.2f} dB (-1 +/- 0.5: {xi_ok}); {elapsed:.2f}s")
    assert purity_ok and xi_ok and elapsed < 5
    assert n_ok, f"n_ph = {n_ph:.5f} lies outside [0.01, 0.03]"


@pytest.fixture(scope="module")
def fig6_rows():
    t0 = time.perf_counter()
    rows = detuning_sweep(SweepSpec(default_detuning_grid(), "both", ((1.0, 1.0),), "squeezing",
                                    system=FIG))
    return rows, time.perf_counter() - t0


def test_criterion_5_both_channels(report, fig6_rows):
    rows, elapsed = fig6_rows
    best = _best(rows, "xi_db")
    ok = abs(best.xi_db + 4) <= 0.5 and abs(best.delta + 2.5) <= 0.5 and elapsed < 60
    report(5, "cavity homodyne plus position monitoring", ok,
           f"best {best.xi_db:.2f} dB at delta = {best.delta:.2f} (-4 +/- 0.5 dB near -2.5); "
           f"{elapsed:.1f}s")
    assert best.xi_db == pytest.approx(-4, abs=0.5)
    assert best.delta == pytest.approx(-2.5, abs=0.5)
    assert elapsed < 60


def test_criterion_6_experiment_model(report):
    kappa0 = intrinsic_loss(ExperimentConfig()) / TWO_PI
    cfg = calibrate(ExperimentConfig(), REFERENCE_OMEGA_M0)
    op0 = operating_point(cfg, 0.0)
    w0 = resonant_frequency(cfg)
    ratios = [operating_point(cfg, x * w0).gamma / operating_point(cfg, x * w0).omega_m
              for x in default_detuning_grid()]
    k_ok = abs(kappa0 - 29e3) <= 500
    w_ok = op0.omega_m / TWO_PI == pytest.approx(33e3, rel=1e-9)
    g_ok = abs(op0.g / TWO_PI - 20e3) <= 0.1 * 20e3
    r_ok = all(r == 0.15 for r in ratios)
    ok = k_ok and w_ok and g_ok and r_ok
    report(6, "experiment model", ok,
           f"kappa0/2pi = {kappa0 / 1e3:.3f} kHz; omega_m0/2pi = {op0.omega_m / TWO_PI / 1e3:.3f} kHz; "
           f"g0/2pi = {op0.g / TWO_PI / 1e3:.2f} kHz (20 +/- 10%); Gamma/omega_m = 0.15 at all "
           f"{len(ratios)} points: {r_ok}")
    assert k_ok and w_ok and g_ok and r_ok


def test_criterion_7_realistic_point(report):
    t0 = time.perf_counter()
    cfg = reference_setup()
    grid = default_detuning_grid()

    def sweep(eff, objective):
        return detuning_sweep(SweepSpec(grid, "both", (eff,), objective, experiment=cfg))

    by_n = sweep((0.5, 0.2), "n_ph")
    by_xi = sweep((0.5, 0.2), "squeezing")
    by_dx = sweep((0.5, 0.2), "delta_x")
    fig7_dx = sweep((1.0, 0.2), "delta_x")
    elapsed = time.perf_counter() - t0

    n = np.array([r.n_ph for r in by_n])
    n_best = by_n[int(n.argmin())]
    xi_best = _best(by_xi, "xi_db")
    dx = np.array([r.delta_x for r in by_dx])
    dx_at = grid[int(dx.argmin())]
    sub8 = [r.delta for r in by_dx if r.delta_x < r.delta_x_vacuum]
    sub7 = [r.delta for r in fig7_dx if r.delta_x < r.delta_x_vacuum]
    checks = {
        "n_ph < 1 everywhere": bool(np.all(n < 1)),
        "min n_ph 0.4 +/- 0.15": abs(n.min() - 0.4) <= 0.15,
        "min n_ph red": n_best.delta < 0,
        "best dB -0.5 +/- 0.3": abs(xi_best.xi_db + 0.5) <= 0.3,
        "best dB red": xi_best.delta < 0,
        "delta_x minimum at resonance": abs(dx_at) <= 0.25,
        "sub-vacuum only blue": all(d > 0 for d in sub8 + sub7) and bool(sub7),
        "runtime": elapsed < 120,
    }
    ok = all(checks.values())
    report(7, "realistic experiment", ok,
           f"max n_ph {n.max():.3f}; min n_ph {n.min():.3f} at {n_best.delta:.2f}; best "
           f"{xi_best.xi_db:.2f} dB at {xi_best.delta:.2f}; delta_x minimum at {dx_at:.2f}; "
           f"sub-vacuum points: eta1=0.5 {len(sub8)}, eta1=1 "
           f"{f'[{min(sub7):.2f}, {max(sub7):.2f}]' if sub7 else 'none'}; {elapsed:.1f}s"
           + ("" if ok else f"; failed: {[k for k, v in checks.items() if not v]}"))
    assert ok, checks


def _random_instance(rng):
    params = SystemParams(1.0, rng.uniform(-6, 6), rng.uniform(0, 3), rng.uniform(0.05, 4),
                          rng.uniform(0.01, 1))
    meas = MeasurementParams(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, math.pi))
    return params, meas


MIX_PARAMS = SystemParams(1, -1, 0.5, 2, 0.1)
MIX_MEAS = MeasurementParams(0.5, 0.5, 1.0)


def test_criterion_8_property_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)

    # (a)-(c) randomized steady states
    states = physical = residual_ok = loewner_pairs = loewner_ok = 0
    worst_residual = 0.0
    for _ in range(500):
        params, meas = _random_instance(rng)
        cm = build_conditional(params, meas)
        lyap = ric = None
        if is_hurwitz(cm.a).is_stable:
            lyap = solve_lyapunov(cm.a, cm.d)
            res = lyapunov_residual(cm.a, lyap.sigma, cm.d)
            states += 1
            physical += is_physical(lyap.sigma)
            residual_ok += res < TOL_SS
            worst_residual = max(worst_residual, res)
        try:
            ric = solve_riccati(cm)
        except StabilityError:
            pass
        else:
            res = riccati_residual(cm, ric.sigma)
            states += 1
            physical += is_physical(ric.sigma)
            residual_ok += res < TOL_SS
            worst_residual = max(worst_residual, res)
        if lyap is not None and ric is not None:
            loewner_pairs += 1
            gap = np.linalg.eigvalsh(lyap.sigma - ric.sigma).min()
            loewner_ok += gap >= -1e-9 * max(1.0, np.abs(lyap.sigma).max())
    a_ok = physical == states
    b_ok = residual_ok == states
    c_ok = loewner_ok == loewner_pairs

    # (d) mixture recovery over 2000 trajectories started at the conditional steady state
    cm = build_conditional(MIX_PARAMS, MIX_MEAS)
    ric = solve_riccati(cm).sigma
    lyap = solve_lyapunov(cm.a, cm.d).sigma
    m = 2000
    ens = simulate_ensemble(GaussianState(np.zeros(4), ric), MIX_PARAMS, MIX_MEAS, 20.0, 0.005,
                            seed=2024, n_trajectories=m, record_every=400)
    cov = np.cov(ens.r_final.T)
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / m)
    z = np.abs(ric + 2 * cov - lyap) / (2 * se)
    d_ok = bool(z.max() < 5)

    # (e) feedback drives the mean to zero; without it the noise keeps it spread
    start = GaussianState(np.array([2.0, 0.0, 1.0, -1.0]), ric)
    on = simulate_ensemble(start, MIX_PARAMS, MIX_MEAS, 30.0, 0.01, seed=7, n_trajectories=1000,
                           feedback=True, record_every=100)
    off = simulate_ensemble(start, MIX_PARAMS, MIX_MEAS, 30.0, 0.01, seed=7, n_trajectories=1000,
                            record_every=100)
    norms_off = np.linalg.norm(off.r_final, axis=1)
    mc_error = norms_off.std() / math.sqrt(len(norms_off))
    e_ok = on.mean_norm[-1] < mc_error and off.mean_norm[-1] > 10 * mc_error

    # (f) detectability verdict against the Riccati ODE
    frng = np.random.default_rng(6)
    mismatches = []
    undetectable = 0
    for k in range(100):
        if k % 5 == 0:
            # resonant x-quadrature homodyne, the blind configuration, at random couplings
            args = (1, 0.0, frng.uniform(0.1, 3), frng.uniform(0.5, 4), frng.uniform(0.05, 1),
                    frng.uniform(0.2, 1), 0.0, 0.0)
        else:
            args = (1, frng.uniform(-6, 6), frng.uniform(0, 3), frng.uniform(0.5, 4),
                    frng.uniform(0.05, 1), frng.uniform(0.1, 1), frng.uniform(0.1, 1),
                    frng.uniform(0, math.pi))
        cm = build_conditional(SystemParams(*args[:5]), MeasurementParams(*args[5:]))
        verdict = is_detectable(cm.b, cm.a_tilde)
        undetectable += not verdict
        _, converged = oracles.riccati_flow(*oracles.filter_matrices(*args), t_max=500)
        if verdict != converged:
            mismatches.append(args)
    f_ok = not mismatches
    elapsed = time.perf_counter() - t0

    ok = a_ok and b_ok and c_ok and d_ok and e_ok and f_ok
    report(8, "property suite", ok,
           f"(a) physical {physical}/{states}; (b) residual < 1e-10 {residual_ok}/{states} "
           f"(worst {worst_residual:.1e}); (c) Loewner {loewner_ok}/{loewner_pairs}; "
           f"(d) mixture max z = {z.max():.2f} (< 5); (e) feedback mean |R| {on.mean_norm[-1]:.1e} "
           f"vs MC error {mc_error:.1e} (off: {off.mean_norm[-1]:.2f}); (f) detectability "
           f"mismatches {len(mismatches)}/100 ({undetectable} undetectable); {elapsed:.1f}s")
    assert a_ok and b_ok and c_ok
    assert d_ok, z
    assert e_ok
    assert f_ok, mismatches
