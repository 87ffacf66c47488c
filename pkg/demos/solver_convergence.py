"""Two solver oracles: the heat equation and a manufactured Forchheimer flow.

With Darcy's law and lam = 1 the equation is the heat equation, so a single
cosine mode decays exactly like exp(-pi^2 t).  For the full two-term law with
the gravity drift we inject the residual of a chosen smooth field as source
and boundary data, and watch the error shrink under refinement.
"""
import math

import numpy as np

from forchflow import ForchheimerLaw, Grid, Solver, SolverConfig, simulate
from forchflow.config import build_spec, parse_config

from forchflow.fluid import zero_data, zero_drift
from forchflow.solver import run
from forchflow.verification import max_error, observed_orders

print("heat oracle, T = 0.1")
prev = None
for N in (32, 64, 128):
    g = Grid((N,), (1.0,))
    x = g.centers[:, 0]
    solver = Solver(g, ForchheimerLaw.darcy(), 1.0, zero_data(zero_drift()),
                    SolverConfig(dt=0.1 * 64 / N ** 2, tol=1e-12))
    traj = run(solver, 2 + np.cos(np.pi * x), 0.1)
    err = np.abs(traj.fields[-1] - (2 + np.cos(np.pi * x) * math.exp(-math.pi ** 2 * 0.1))).max()
    note = "" if prev is None else f"  ratio {prev / err:.2f}"
    print(f"  N = {N:4d}  error {err:.3e}{note}")
    prev = err

studies = {
    "space": parse_config({"preset": "manufactured-smooth"}),
    "time": parse_config({"preset": "manufactured-smooth", "domain": {"cells": [128]},
                          "manufactured": {"form": "exp-decay", "study": "time", "rate": 1.0},
                          "solver": {"T": 1.0, "dt": 0.1}}),
}
for name, cfg in studies.items():
    sizes, errors = [], []
    for level in range(3):
        spec = build_spec(cfg, level)
        errors.append(max_error(spec, simulate(spec)))
        sizes.append(spec.config.dt if name == "time" else spec.grid.h[0])
    orders = observed_orders(sizes, errors)
    print(f"\nmanufactured {name} study")
    for h, e in zip(sizes, errors):
        print(f"  h = {h:.4g}  error {e:.3e}")
    print("  observed orders " + ", ".join(f"{o:.3f}" for o in orders))
