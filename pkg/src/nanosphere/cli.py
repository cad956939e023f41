"""Command-line front end.

    nanosphere [command] [--preset NAME] [--config PATH] [--set KEY=VALUE ...]
               [--seed N] [--format csv|json] [--out PATH]

Exit status is 0 on success, 2 for configuration errors and 3 when no
steady state exists or a numerical routine fails. Diagnostics go to stderr
as ``nanosphere: <kind>: <message>``.

Every output starts with the resolved configuration (``# `` prefixed lines
in CSV, a ``config`` object in JSON); feeding it back with ``--config``
reproduces the data exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import config as cfg
from .dynamics import simulate_ensemble
from .errors import ConfigError, DomainError, NumericalError, StabilityError
from .experiment import ExperimentConfig, calibrate
from .matrices import build_conditional
from .merit import summarize
from .model import GaussianState, MeasurementParams, SystemParams, thermal_state, validate
from .solvers import solve_lyapunov, solve_riccati
from .stability import is_detectable, is_hurwitz
from .sweep import SweepSpec, decoupled_curves, detuning_sweep, optimize_phase, stability_scan

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SWEEP_COLUMNS = (
    "delta", "eta1", "eta2", "phi_opt", "n_ph", "purity", "xi", "xi_db", "stable", "detectable",
)
EXPERIMENT_COLUMNS = SWEEP_COLUMNS + ("delta_x", "delta_x_vacuum", "omega_m", "g", "n_c")
_UPPER = [(i, j) for i in range(4) for j in range(i, 4)]


def _system(run):
    s = run["system"]
    return SystemParams(s["omega_m"], s["delta"], s["g"], s["kappa"], s["gamma"])


def _measurement(run):
    m = run["measurement"]
    return MeasurementParams(m["eta1"], m["eta2"], m["phi"])


def _experiment(run) -> ExperimentConfig:
    e = run["experiment"]
    config = ExperimentConfig(
        radius=e["radius"], mass=e["mass"], wavelength=e["wavelength"],
        cavity_length=e["cavity_length"], finesse=e["finesse"], waist=e["waist"],
        epsilon_r=e["epsilon_r"], gamma_ratio=e["gamma_ratio"],
        mode_volume=e["mode_volume"], kappa_total=e["kappa_total"],
        input_power=e["input_power"],
    )
    if config.input_power is not None:
        return config
    g0 = None if e["g0_hz"] is None else 2 * math.pi * e["g0_hz"]
    return calibrate(config, 2 * math.pi * e["omega_m0_hz"], g0)


def _sweep_spec(run, experiment=None):
    s = run["sweep"]
    return SweepSpec(
        deltas=tuple(s["deltas"].array()),
        scenario=s["scenario"],
        efficiencies=s["efficiencies"],
        objective=s["objective"],
        system=None if experiment is not None else _system(run),
        experiment=experiment,
    )


def _sweep_table(rows, columns):
    return list(columns), [[getattr(r, c) for c in columns] for r in rows]


def cmd_stability_map(run):
    st = run["stability"]
    s = run["system"]
    deltas, gs = st["deltas"].array(), st["gs"].array()
    validate(_system(run))
    table = stability_scan(deltas, gs, s["kappa"], s["gamma"], s["omega_m"])
    columns = ["delta"] + [f"g={_fmt(g, 10)}" for g in gs]
    rows = [[d] + [int(v) for v in line] for d, line in zip(deltas, table.stable)]
    return columns, rows


def cmd_steady_state(run):
    params, meas = validate(_system(run), _measurement(run))
    m = run["measurement"]
    cm = build_conditional(params, meas)
    stable = is_hurwitz(cm.a).is_stable
    if meas.monitored:
        if m["optimize_phase"] and meas.eta1 > 0:
            meas = replace(meas, phi=optimize_phase(params, meas, m["objective"]).phi)
            cm = build_conditional(params, meas)
        ss = solve_riccati(cm)
        detectable = is_detectable(cm.b, cm.a_tilde)
    else:
        ss = solve_lyapunov(cm.a, cm.d)
        detectable = stable
    s = summarize(ss.sigma)
    columns = ["delta", "eta1", "eta2", "phi", "n_ph", "purity", "xi", "xi_db",
               "stable", "detectable", "method", "residual"]
    columns += [f"sigma_{i + 1}{j + 1}" for i, j in _UPPER]
    row = [params.delta, meas.eta1, meas.eta2, meas.phi, s.n_ph, s.purity, s.xi, s.xi_db,
           stable, detectable, ss.method, ss.residual]
    row += [ss.sigma[i, j] for i, j in _UPPER]
    return columns, [row]


def cmd_sweep(run):
    rows = detuning_sweep(_sweep_spec(run))
    return _sweep_table(rows, SWEEP_COLUMNS)


def cmd_experiment_sweep(run):
    rows = detuning_sweep(_sweep_spec(run, _experiment(run)))
    return _sweep_table(rows, EXPERIMENT_COLUMNS)


def cmd_decoupled(run):
    d = run["decoupled"]
    rows = decoupled_curves(d["gammas"].array(), d["eta2"])
    columns = ["gamma_ratio", "eta2", "n_ph", "purity", "xi", "xi_db"]
    return columns, [[getattr(r, c) for c in columns] for r in rows]


def cmd_trajectory(run):
    t = run["trajectory"]
    params, meas = validate(_system(run), _measurement(run))
    if len(t["r0"]) != 4:
        raise ConfigError("trajectory.r0 needs four values (x_c, p_c, x_m, p_m)")
    start = thermal_state(t["n_cavity"], t["n_mech"])
    initial = GaussianState(np.array(t["r0"]), start.sigma)
    record = simulate_ensemble(
        initial, params, meas, t["t_final"], t["dt"], seed=run.seed,
        n_trajectories=t["n_trajectories"], feedback=t["feedback"],
        record_every=t["record_every"],
    )
    columns = ["t", "r_xc", "r_pc", "r_xm", "r_pm", "mean_norm"]
    rows = [[tt, *r, nrm] for tt, r, nrm in zip(record.times, record.mean_r, record.mean_norm)]
    return columns, rows


COMMANDS = {
    "stability-map": cmd_stability_map,
    "steady-state": cmd_steady_state,
    "sweep": cmd_sweep,
    "decoupled": cmd_decoupled,
    "trajectory": cmd_trajectory,
    "experiment-sweep": cmd_experiment_sweep,
}


def _fmt(x, precision):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if not math.isfinite(x):
        return ""
    return format(x, f".{precision}g")


def _json_value(x, precision):
    if x is None or isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return float(format(x, f".{precision}g")) if math.isfinite(x) else None


def render(run: cfg.RunConfig, columns, rows) -> str:
    """Serialise a table with its resolved config in the configured format."""
    precision = run["output"]["precision"]
    if run["output"]["format"] == "json":
        doc = {
            "config": run.as_text(),
            "columns": list(columns),
            "rows": [[_json_value(v, precision) for v in row] for row in rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for line in run.dumps().splitlines():
        buf.write(f"# {line}".rstrip() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v, precision) for v in row])
    return buf.getvalue()


def embedded_config(text: str) -> str:
    """Recover the config text stored at the top of a CSV or JSON output."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(stripped)
        lines = []
        for section, keys in doc["config"].items():
            if section != "run":
                lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in keys.items())
        return "\n".join(lines) + "\n"
    lines = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        lines.append(line[2:] if line.startswith("# ") else line[1:])
    return "\n".join(lines) + "\n"


def run(run_config: cfg.RunConfig) -> str:
    """Execute the configured command and return the rendered output."""
    columns, rows = COMMANDS[run_config.command](run_config)
    return render(run_config, columns, rows)


def _parser():
    p = argparse.ArgumentParser(
        prog="nanosphere",
        description="Steady states of a continuously monitored levitated nanosphere.",
    )
    p.add_argument("command", nargs="?", choices=cfg.COMMANDS,
                   help="what to compute (default: taken from the config or preset)")
    p.add_argument("--preset", help="start from a built-in configuration (see --list-presets)")
    p.add_argument("--config", help="config file; its values override the preset")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one value, e.g. sweep.objective=purity")
    p.add_argument("--seed", type=int, help="noise seed for the trajectory command")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--list-presets", action="store_true", help="list presets and exit")
    return p


def _diag(kind, message):
    print(f"nanosphere: {kind}: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.list_presets:
        for name, desc in cfg.presets():
            print(f"{name}\t{desc}")
        return EXIT_OK

    overrides = list(args.overrides)
    if args.command:
        overrides.append(f"command={args.command}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.format:
        overrides.append(f"output.format={args.format}")
    if args.out:
        overrides.append(f"output.path={args.out}")

    try:
        text = None
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = embedded_config(fh.read()) if _is_output(args.config) else fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        run_config = cfg.build(args.preset, text, overrides, origin=args.config or "config")
        output = run(run_config)
    except (StabilityError, NumericalError) as exc:
        _diag("numerical error", exc)
        return EXIT_NUMERICAL
    except DomainError as exc:
        _diag("config error", exc)
        return EXIT_CONFIG

    path = run_config["output"]["path"]
    if path:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(output)
        except OSError as exc:
            _diag("config error", f"cannot write {path}: {exc.strerror}")
            return EXIT_CONFIG
    else:
        sys.stdout.write(output)
    return EXIT_OK


def _is_output(path):
    # earlier outputs can be passed straight back as configs
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().strip()
    return head.startswith("{") or head.replace(" ", "") == f"#schema={cfg.SCHEMA_VERSION}"


if __name__ == "__main__":
    sys.exit(main())
