"""How much does monitoring help?

Compares the steady-state phonon number and squeezing at a few red
detunings for no monitoring, cavity homodyne alone, position monitoring
alone, and both together (g = 1, kappa = 2, Gamma = 0.1).

    python3 demos/monitoring_gain.py
"""

import numpy as np

from nanosphere import SystemParams, detuning_sweep
from nanosphere.sweep import SweepSpec

SYSTEM = SystemParams(omega_m=1, delta=0, g=1, kappa=2, gamma=0.1)
DELTAS = np.array([-6.0, -5.0, -4.0, -3.0, -2.0, -1.0])

CASES = [
    ("none", "unconditional", (0.0, 0.0)),
    ("cavity", "cavity-homodyne", (1.0, 0.0)),
    ("position", "position-only", (0.0, 1.0)),
    ("both", "both", (1.0, 1.0)),
]


def main():
    print(f"{'delta':>6} " + " ".join(f"{name:>18}" for name, _, _ in CASES))
    columns = []
    for _, scenario, pair in CASES:
        columns.append(detuning_sweep(SweepSpec(DELTAS, scenario, (pair,), system=SYSTEM)))
    for i, delta in enumerate(DELTAS):
        cells = []
        for rows in columns:
            r = rows[i]
            cells.append("unstable".rjust(18) if r.n_ph is None
                         else f"{r.n_ph:8.3f} {r.xi_db:+6.2f} dB".rjust(18))
        print(f"{delta:6.1f} " + " ".join(cells))


if __name__ == "__main__":
    main()
