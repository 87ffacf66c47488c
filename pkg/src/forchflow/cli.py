"""Command-line front end.

Usage::

    forchflow constitutive|simulate|estimate|verify --config <path-or-preset>
              [--config ...] [--out <dir>] [--levels k] [--jobs j]

Each ``--config`` is one scenario; scenarios run in a process pool (one per
worker) and write into ``<out>/<scenario name>/``.  Exit codes: 0 success,
2 configuration error, 3 solver failure, 4 admissibility rejection (the
largest code over all scenarios is returned).

Every CSV begins with ``# key: value`` metadata lines (config hash, format
version, scenario name, and command-specific entries) followed by a single
header row.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import config as cf
from .constitutive import eval_H, eval_K, fit_K_bounds, inverse_s, log_grid
from .exponents import (AdmissibilityError, exponent_report, nu_family, profile_for,
                        render_table, lebesgue_bound)
from .moser import build_schedule, limit_products, moser_alpha0_min
from .solver import SolverError, simulate, write_grid, write_monitors, write_trajectory
from .verification import (ConvergenceStudy, EstimateReport, Verdict, estimate_report,
                           lebesgue_integral, observed_orders, refinement_verdicts)

log = logging.getLogger("forchflow")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ADMISSIBILITY = 0, 2, 3, 4

ORACLE_TOL = 1e-3         # max |u - u_exact| at the final time
MIN_ORDER = {"space": 1.8, "time": 0.9}  # manufactured convergence orders
CONSERVATION_TOL = 1e-10  # relative change of int u^lam per step


def _header(meta: dict) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in meta.items())


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _finite(x):
    """JSON has no infinities; encode them as strings."""
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else ("-inf" if x < 0 else "nan"))


def resolve_config(ref: str) -> dict:
    """A YAML file path, or the name of a built-in preset."""
    if os.path.exists(ref):
        return cf.load_config(ref)
    if ref in cf.PRESETS:
        return cf.parse_config({"preset": ref})
    raise cf.ConfigError("<config>", f"no such file or preset: {ref!r}")


# ---------------------------------------------------------------------------
# commands

def cmd_constitutive(cfg: dict, out: str, levels: Optional[int] = None) -> dict:
    """Table of ``xi, s, K, H`` on a log grid plus fitted ``d1, d2, d3`` and ``a``."""
    law = cf.build_law(cfg)
    xi = log_grid(1e8, 200)
    s, K, H = inverse_s(law, xi), eval_K(law, xi), eval_H(law, xi)
    fit = fit_K_bounds(law)
    meta = cf.metadata(cfg, command="constitutive", a=repr(fit.a), d1=repr(fit.d1),
                       d2=repr(fit.d2), d3=repr(fit.d3))
    with open(os.path.join(out, "constitutive.csv"), "w", newline="") as fh:
        fh.write(_header(meta))
        fh.write("xi,s,K,H\n")
        for row in zip(xi, s, K, H):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return {"a": fit.a, "d1": fit.d1, "d2": fit.d2, "d3": fit.d3}


def _monitors(spec):
    lam = spec.lam
    mons = {"mass": lambda g, u, t: g.integrate(np.maximum(u, 0.0) ** lam),
            "min_u": lambda g, u, t: float(np.min(u)),
            "max_u": lambda g, u, t: float(np.max(u))}
    if spec.exact is not None:
        exact = spec.exact
        mons["error_linf"] = lambda g, u, t: float(np.abs(u - exact(g.centers, t)).max())
    return mons


def _levels(cfg, levels, default):
    if levels is not None:
        return levels
    return 3 if cfg["manufactured"]["enabled"] else default


def cmd_simulate(cfg: dict, out: str, levels: Optional[int] = None) -> dict:
    """Trajectory, grid and monitor files per refinement level; a convergence
    table when an exact solution is known and more than one level runs."""
    nlev = _levels(cfg, levels, 1)
    sizes, errors, summary = [], [], []
    for lev in range(nlev):
        spec = cf.build_spec(cfg, lev)
        traj = simulate(spec, _monitors(spec), stride=cfg["solver"]["stride"])
        meta = cf.metadata(cfg, command="simulate", level=lev,
                           cells="x".join(map(str, spec.grid.shape)), dt=repr(spec.config.dt))
        write_trajectory(os.path.join(out, f"trajectory_L{lev}.csv"), traj, meta)
        write_monitors(os.path.join(out, f"monitors_L{lev}.csv"), traj, meta)
        write_grid(os.path.join(out, f"grid_L{lev}.npz"), spec.grid, meta)
        entry = {"level": lev, "cells": list(spec.grid.shape), "dt": spec.config.dt,
                 "steps": len(traj.steps), "t_final": traj.times[-1]}
        if spec.exact is not None:
            err = traj.monitors["error_linf"][-1]
            entry["error_linf"] = err
            time_study = cfg["manufactured"]["enabled"] and cfg["manufactured"]["study"] == "time"
            sizes.append(spec.config.dt if time_study else max(spec.grid.h))
            errors.append(err)
        summary.append(entry)
    result = {"levels": summary}
    if len(errors) > 1 and all(e > 0 for e in errors):
        study = ConvergenceStudy(sizes, errors, observed_orders(sizes, errors))
        meta = cf.metadata(cfg, command="simulate", table="convergence")
        with open(os.path.join(out, "convergence.csv"), "w", newline="") as fh:
            fh.write(_header(meta))
            fh.write("size,error,order\n")
            for k, (sz, e) in enumerate(zip(sizes, errors)):
                o = "" if k == 0 else repr(study.orders[k - 1])
                fh.write(f"{sz!r},{e!r},{o}\n")
        with open(os.path.join(out, "convergence.txt"), "w") as fh:
            fh.write(study.table() + "\n")
        result["orders"] = study.orders
    _write_json(os.path.join(out, "simulate.json"), {"meta": cf.metadata(cfg), **result})
    return result


def _profile(cfg, require_moser):
    law, model = cf.build_law(cfg), cf.build_model(cfg)
    data = cf.build_data(cfg, model)
    return profile_for(law, model, data, cfg["domain"]["dimension"],
                       p=cfg["estimate"]["p"], require_moser=require_moser)


def _bounds(cfg, profile) -> dict:
    """Lebesgue thresholds and ``V(t)`` (no data, ``int u0^alpha`` from the
    configured initial field when a grid exists) and the Moser ladder."""
    est = cfg["estimate"]
    C0 = est["C0"] if est["C0"] is not None else est["C"]
    out = {"C0": C0, "lebesgue": {}, "moser": None}
    u0_int = {}
    if cfg["domain"]["cells"] is not None and not cfg["manufactured"]["enabled"]:
        grid = cf.build_grid(cfg)
        u0 = cf.build_initial(cfg, grid)
        u0_int = {al: lebesgue_integral(grid, u0, al) for al in est["alphas"]}
    for al in est["alphas"]:
        key = repr(float(al))
        try:
            nu_family(profile, al)
        except AdmissibilityError as exc:
            out["lebesgue"][key] = {"admissible": False, "reason": str(exc)}
            continue
        norm = u0_int.get(al, 0.0)
        b = lebesgue_bound(profile, al, norm, None, C0)
        horizon = b.T_star if math.isfinite(b.T_star) else cfg["solver"]["T"]
        ts = np.linspace(0.0, horizon, 21)[:-1] if math.isfinite(b.T_star) else \
            np.linspace(0.0, horizon, 21)
        out["lebesgue"][key] = {
            "admissible": True, "int_u0_alpha": norm, "nu4": b.nu4, "C1": _finite(b.C1),
            "T_star": _finite(b.T_star), "T_small": _finite(b.T_small),
            "constant_bound": b.constant_bound, "gradient_budget": b.gradient_budget,
            "V": {"t": ts.tolist(), "V": [_finite(v) for v in np.atleast_1d(b.V(ts))]}}
    if est["alpha0"] is not None:
        T = cfg["solver"]["T"] if cfg["solver"]["T"] > 0 else 1.0
        strict, incl = moser_alpha0_min(profile)
        sched = build_schedule(profile, est["alpha0"], T, est["sigma"], est["levels"])
        prods = limit_products(sched)
        out["moser"] = {
            "alpha0": est["alpha0"], "alpha0_strict_min": strict, "alpha0_min": incl,
            "kappa_tilde": profile.kappa_tilde, "T": T, "sigma": est["sigma"],
            "beta": sched.beta[:10].tolist(), "t": sched.t[:10].tolist(),
            "mu_tilde": prods.mu_tilde, "nu_tilde": prods.nu_tilde, "G": prods.G,
            "omega": prods.omega, "omega1": prods.omega1, "omega2": prods.omega2,
            "omega3": prods.omega3, "levels_used": prods.levels_used}
    return out


def cmd_estimate(cfg: dict, out: str, levels: Optional[int] = None) -> dict:
    """Exponent report (JSON and table) and bound evaluations."""
    profile = _profile(cfg, require_moser=cfg["estimate"]["alpha0"] is not None)
    rep = exponent_report(profile, cfg["estimate"]["alphas"])
    rep["meta"] = cf.metadata(cfg, command="estimate")
    _write_json(os.path.join(out, "exponents.json"), rep)
    with open(os.path.join(out, "exponents.txt"), "w") as fh:
        fh.write(render_table(rep) + "\n")
    bounds = _bounds(cfg, profile)
    bounds["meta"] = rep["meta"]
    _write_json(os.path.join(out, "bounds.json"), bounds)
    return {"eta0": profile.eta0, "moser_ok": profile.moser_ok}


def _conservation_verdict(traj) -> Verdict:
    m = np.asarray(traj.monitors["mass"])
    scale = np.maximum(np.abs(m[:-1]), np.finfo(float).tiny)
    drift = float(np.max(np.abs(np.diff(m)) / scale)) if m.size > 1 else 0.0
    if not np.any(m):
        drift = 0.0
    return Verdict("conservation", drift <= CONSERVATION_TOL, drift,
                   f"max relative change of int u^lam per step = {drift:.3e}")


def _oracle_verdict(traj) -> Verdict:
    err = float(traj.monitors["error_linf"][-1])
    return Verdict("exact_solution_error", err < ORACLE_TOL, err,
                   f"max |u - u_exact| at T = {err:.3e} (tolerance {ORACLE_TOL:g})")


def _no_data(cfg):
    return (cfg["boundary"]["kind"] == "zero" and cfg["source"]["kind"] == "zero"
            and not cfg["manufactured"]["enabled"])


def cmd_verify(cfg: dict, out: str, levels: Optional[int] = None) -> dict:
    """Simulate at ``levels`` refinements (default 2, or 3 for manufactured
    cases) and write one estimate report per level plus verdicts across
    levels: constant drift, and the observed order for manufactured cases."""
    nlev = _levels(cfg, levels, 2)
    est = cfg["estimate"]
    try:
        profile = _profile(cfg, require_moser=est["alpha0"] is not None)
        reason = None
    except AdmissibilityError as exc:
        profile, reason = None, str(exc)
    reports, sizes, errors = [], [], []
    study = cfg["manufactured"]["study"]
    for lev in range(nlev):
        spec = cf.build_spec(cfg, lev)
        traj = simulate(spec, _monitors(spec), stride=cfg["solver"]["stride"])
        meta = cf.metadata(cfg, command="verify", level=lev,
                           cells="x".join(map(str, spec.grid.shape)))
        if profile is not None:
            rep = estimate_report(spec, traj, profile, est["alphas"], est["alpha0"],
                                  est["sigma"], est["levels"], meta=meta)
        else:
            rep = EstimateReport(times=np.asarray(traj.times), meta=meta,
                                 min_u=float(np.min(traj.fields)))
            rep.verdicts.append(Verdict("estimates", False, None,
                                        f"profile inadmissible: {reason}", skipped=True))
        if _no_data(cfg):
            rep.verdicts.append(_conservation_verdict(traj))
        if spec.exact is not None:
            errors.append(traj.monitors["error_linf"][-1])
            sizes.append(spec.config.dt if study == "time" else max(spec.grid.h))
            if not cfg["manufactured"]["enabled"]:
                rep.verdicts.append(_oracle_verdict(traj))
        rep.to_json(os.path.join(out, f"report_L{lev}.json"))
        with open(os.path.join(out, f"report_L{lev}.txt"), "w") as fh:
            fh.write(rep.render() + "\n")
        reports.append(rep)
    drift = refinement_verdicts(reports)
    if cfg["manufactured"]["enabled"] and len(errors) > 1:
        orders = observed_orders(sizes, errors)
        lo = MIN_ORDER[study]
        drift.append(Verdict(f"convergence_order:{study}", min(orders) >= lo, min(orders),
                             "orders " + ", ".join(f"{o:.3f}" for o in orders)
                             + f" (need >= {lo:g})"))
    passed = all(r.passed for r in reports) and all(v.passed for v in drift)
    summary = {"meta": cf.metadata(cfg, command="verify"), "passed": passed,
               "levels": [{"level": k, "passed": r.passed,
                           "constants": {c: _finite(v) for c, v in r.constants.items()},
                           "min_u": r.min_u} for k, r in enumerate(reports)],
               "refinement": [v.as_dict() for v in drift]}
    _write_json(os.path.join(out, "report.json"), summary)
    with open(os.path.join(out, "report.txt"), "w") as fh:
        for k, r in enumerate(reports):
            fh.write(f"level {k}\n{r.render()}\n\n")
        fh.write("across levels\n")
        for v in drift:
            fh.write(f"  {v.id:<48} {'PASS' if v.passed else 'FAIL'}  {v.detail}\n")
        fh.write(f"overall: {'PASS' if passed else 'FAIL'}\n")
    return {"passed": passed}


COMMANDS = {"constitutive": cmd_constitutive, "simulate": cmd_simulate,
            "estimate": cmd_estimate, "verify": cmd_verify}


# ---------------------------------------------------------------------------
# driver

def run_scenario(command: str, ref: str, out_root: Optional[str],
                 levels: Optional[int]) -> tuple[int, str]:
    """Run one scenario; returns ``(exit code, message)``.  Never raises for
    the documented failure classes."""
    try:
        cfg = resolve_config(ref)
        out = os.path.join(out_root or cfg["output"]["dir"], cfg["name"])
        os.makedirs(out, exist_ok=True)
        res = COMMANDS[command](cfg, out, levels)
        return EXIT_OK, f"{cfg['name']}: {command} ok -> {out} {json.dumps(res, default=_finite)}"
    except cf.ConfigError as exc:
        return EXIT_CONFIG, f"{ref}: configuration error: {exc}"
    except SolverError as exc:
        return EXIT_SOLVER, f"{ref}: solver failure at t = {exc.t:.6g}: {exc}"
    except AdmissibilityError as exc:
        return EXIT_ADMISSIBILITY, f"{ref}: rejected: {exc}"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forchflow",
                                 description="Forchheimer flow solver and estimate checks")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", action="append", required=True,
                    help="YAML scenario file or preset name (repeatable)")
    ap.add_argument("--out", default=None, help="output root (default: output.dir)")
    ap.add_argument("--levels", type=int, default=None,
                    help="refinement levels (simulate: 1, or 3 for manufactured; verify: 2)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.levels is not None and args.levels < 1:
        print("--levels must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(args.command, ref, args.out, args.levels) for ref in args.config]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_scenario, *zip(*jobs)))
    else:
        results = [run_scenario(*j) for j in jobs]
    code = EXIT_OK
    for rc, msg in results:
        print(msg, file=sys.stdout if rc == EXIT_OK else sys.stderr)
        code = max(code, rc)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
