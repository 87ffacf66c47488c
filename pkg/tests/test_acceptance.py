"""Acceptance criteria.  Each test records one PASS/FAIL line, printed in the
terminal summary (see ``conftest.py``)."""
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from forchflow.config import ORACLE_SUITE, build_model, build_spec, parse_config
from forchflow.constitutive import ForchheimerLaw, eval_H, eval_K, inverse_s
from forchflow.exponents import AdmissibilityError, build_profile, nu_family, profile_for, \
    lebesgue_bound
from forchflow.fluid import derive_parameters, zero_data, zero_drift
from forchflow.moser import build_schedule, direct_recursion, genn_bound, limit_products, \
    partial_log_products
from forchflow.solver import Field, Grid, Solver, SolverConfig, run, simulate
from forchflow.verification import (estimate_report, lebesgue_integral, max_error,
                                    observed_orders, refinement_verdicts)

RESULTS: list[str] = []


def record(tag, ok, detail, t0):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  [{tag}] {detail}  ({time.perf_counter() - t0:.2f} s)")
    return ok


def random_laws(count=20, seed=20240):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        N = int(rng.integers(0, 5))
        exps = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 4.0, N))])
        if np.any(np.diff(exps) <= 1e-6):
            exps = np.arange(N + 1) * 0.75
        out.append(ForchheimerLaw(tuple(exps), tuple(10 ** rng.uniform(-2, 2, N + 1))))
    return out


XI = np.concatenate([[0.0], np.logspace(-6, 8, 999)])


def test_c01_constitutive_inverse():
    laws = random_laws()
    t0 = time.perf_counter()
    worst, mono, exact0 = 0.0, True, True
    for law in laws:
        s = inverse_s(law, XI)
        g = sum(c * s ** e for e, c in zip(law.exponents, law.coefficients))
        worst = max(worst, float(np.max(np.abs(s * g - XI) / (1 + XI))))
        K = eval_K(law, XI)
        mono &= bool(np.all(np.diff(K) <= 0))
        exact0 &= eval_K(law, 0.0) == 1 / law.a0
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and mono and exact0 and dt < 1.0
    record("C1", ok, f"inverse residual {worst:.2e} <= 1e-12, K non-increasing {mono}, "
           f"K(0)=1/a0 {exact0}, runtime < 1 s", t0)
    assert ok


def test_c02_H_sandwich():
    laws = random_laws()
    t0 = time.perf_counter()
    lo = hi = 0.0
    for law in laws:
        H, K = eval_H(law, XI, rtol=1e-12), eval_K(law, XI)
        x = XI[1:]
        lo = max(lo, float(np.max((K[1:] * x ** 2 - H[1:]) / H[1:])))
        hi = max(hi, float(np.max((H[1:] - 2 * K[1:] * x ** 2) / H[1:])))
    dt = time.perf_counter() - t0
    ok = lo <= 1e-10 and hi <= 1e-10 and dt < 5.0
    record("C2", ok, f"K xi^2 <= H <= 2 K xi^2: worst relative violations {lo:.1e}, {hi:.1e}"
           " (tol 1e-10), runtime < 5 s", t0)
    assert ok


def test_c03_degeneracy_exponent():
    t0 = time.perf_counter()
    a2 = ForchheimerLaw.two_term().degeneracy
    a3 = ForchheimerLaw.three_term().degeneracy
    ok = a2 == 0.5 and a3 == 2 / 3
    record("C3", ok, f"two-term a = {a2}, three-term a = {a3:.15g}", t0)
    assert ok


def test_c04_golden_exponents():
    t0 = time.perf_counter()
    a, lam, n = F(2, 3), F(5, 12), 3
    p = (F(26, 25), F(26, 25), F(11, 10), F(11, 10))
    d = 1 - lam
    ref = {"alpha_star": n * (a - d) / (2 - a), "kappa_f": 1 + (2 - a) / n,
           "kappa_B": 1 + (1 - a) / n, "kappa(2)": 1 + (2 - a) / n - (a - d) / 2}
    ks = max(((2 - a) * p[0] - 1) / (1 - a), p[2])
    kt2 = (ks ** 2 + ref["kappa_f"]) / 2
    law = ForchheimerLaw.three_term()
    prof = profile_for(law, derive_parameters("isentropic", gamma=1.4), zero_data(zero_drift(1, 3)),
                       3, p=[float(x) for x in p])
    got = {"alpha_star": prof.alpha_star, "kappa_f": prof.kappa_f, "kappa_B": prof.kappa_B,
           "kappa(2)": prof.kappa(2.0)}
    errs = {k: abs(got[k] - float(v)) for k, v in ref.items()}
    errs["kappa_star"] = abs(prof.kappa_star - float(ks))
    errs["kappa_tilde"] = abs(prof.kappa_tilde - math.sqrt(float(kt2)))
    literal = (ref["alpha_star"] == F(3, 16) and ref["kappa_f"] == F(13, 9)
               and ref["kappa_B"] == F(10, 9) and ref["kappa(2)"] == F(101, 72) and ks == F(116, 100))
    ok = literal and max(errs.values()) <= 1e-12
    record("C4", ok, f"alpha*=3/16, kappa_f=13/9, kappa_B=10/9, kappa(2)=101/72, kappa*=1.16, "
           f"kappa_tilde^2 = {kt2} exact; max deviation {max(errs.values()):.1e} <= 1e-12", t0)
    assert ok


def test_c04b_kappa_tilde_literal_value():
    # The stated target sqrt(1.395) takes kappa_f rounded to 1.4444; the exact
    # rational value is kappa_tilde^2 = 7847/5625 = 1.39502...
    t0 = time.perf_counter()
    prof = build_profile(2 / 3, 5 / 12, 3, 0.0, p=(1.04, 1.04, 1.1, 1.1))
    dev = abs(prof.kappa_tilde - math.sqrt(1.395))
    ok = dev <= 1e-12
    record("C4b", ok, f"kappa_tilde = {prof.kappa_tilde:.15g} vs sqrt(1.395) = "
           f"{math.sqrt(1.395):.15g}: deviation {dev:.2e} (tol 1e-12); exact value is "
           "sqrt(7847/5625)", t0)
    assert ok, "target sqrt(1.395) is inconsistent with the exact-rational value"


def test_c05_sequence_engine():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    viol = 0
    for _ in range(1000):
        J = int(rng.integers(1, 26))
        kappa = rng.uniform(0.5, 8.0, J)
        r = rng.uniform(0.2, 6.0, J)
        s = r + rng.uniform(0.0, 3.0, J)
        omega = rng.uniform(1.0, 4.0, J)
        A, y0 = rng.uniform(1.0, 5.0), rng.uniform(0.0, 5.0)
        g = genn_bound(y0, kappa, r, s, omega, A, J)
        y = direct_recursion(y0, kappa, r, s, omega, A, J)
        viol += int(np.any(y > g.bounds * (1 + 1e-10) + 1e-300))
    y0 = 1.7
    kap = lambda j: 2.0 ** (j + 1)
    tight = genn_bound(y0, kap, kap, kap, lambda j: 1.0, A=2.0, J=60)
    yy = direct_recursion(y0, kap, kap, kap, lambda j: 1.0, 2.0, 80)
    err = max(abs(tight.limit - 4 * y0), abs(yy[-1] - 4 * y0)) / (4 * y0)
    dt = time.perf_counter() - t0
    ok = viol == 0 and err <= 1e-9 and dt < 5.0
    record("C5", ok, f"1000 families, {viol} bound violations; tight example limit 4 y0 "
           f"relative error {err:.1e} <= 1e-9, runtime < 5 s", t0)
    assert ok


def test_c06_moser_products():
    t0 = time.perf_counter()
    details, ok = [], True
    ladder = build_profile(2 / 3, 5 / 12, 3, 0.0, p=(1.04, 1.04, 1.1, 1.1), require_moser=True)
    preset = parse_config({"preset": "gas-three-term-3d"})
    prof3 = profile_for(ForchheimerLaw.three_term(), build_model(preset),
                        zero_data(zero_drift(1, 3)), 3, p=preset["estimate"]["p"],
                        require_moser=True)
    # the alpha0 = 8 example ladder sits below the alpha0 admissibility bound
    for name, prof, a0, check in (("example alpha0=8", ladder, 8.0, False),
                                  ("preset alpha0=70", prof3, 70.0, True)):
        s = build_schedule(prof, a0, 1.0, 0.5, check=check)
        diff = np.max(np.abs(partial_log_products(s, 200) - np.asarray(partial_log_products(s, 400))))
        lp = limit_products(s)
        ok &= bool(diff < 1e-8 and lp.mu_tilde <= 1 <= lp.nu_tilde)
        details.append(f"{name}: |dlog P| = {diff:.1e}, mu={lp.mu_tilde:.4f}, nu={lp.nu_tilde:.4f}")
    record("C6", ok, "; ".join(details), t0)
    assert ok


@pytest.mark.parametrize("shape", [(64,), (32, 32)])
def test_c07_conservation(shape):
    t0 = time.perf_counter()
    g = Grid(shape, (1.0,) * len(shape))
    lam = 5 / 12
    u0 = 1 + 0.5 * np.prod(np.cos(np.pi * g.centers), axis=1)
    solver = Solver(g, ForchheimerLaw.two_term(), lam, zero_data(zero_drift(1.0, g.n)),
                    SolverConfig(dt=1e-3, tol=1e-12))
    st, m_prev, worst = Field(u0), g.integrate(u0 ** lam), 0.0
    for _ in range(100):
        st = solver.step(st)
        m = g.integrate(st.values ** lam)
        worst = max(worst, abs(m - m_prev) / m_prev)
        m_prev = m
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 30
    record("C7", ok, f"{'x'.join(map(str, shape))}: max relative mass change per step "
           f"{worst:.1e} <= 1e-10 over 100 steps, runtime < 30 s", t0)
    assert ok


def test_c08_heat_oracle():
    t0 = time.perf_counter()
    errs = []
    for N in (64, 128):
        g = Grid((N,), (1.0,))
        x = g.centers[:, 0]
        s = Solver(g, ForchheimerLaw.darcy(), 1.0, zero_data(zero_drift()),
                   SolverConfig(dt=0.1 * 64 / N ** 2, tol=1e-12))
        traj = run(s, 2 + np.cos(np.pi * x), 0.1)
        exact = 2 + np.cos(np.pi * x) * math.exp(-math.pi ** 2 * 0.1)
        errs.append(float(np.abs(traj.fields[-1] - exact).max()))
    dt = time.perf_counter() - t0
    ratio = errs[0] / errs[1]
    ok = errs[1] < 1e-3 and ratio >= 3.5 and dt < 30
    record("C8", ok, f"L-inf error at 128 cells {errs[1]:.2e} < 1e-3, ratio 64->128 "
           f"{ratio:.2f} >= 3.5, runtime < 30 s", t0)
    assert ok


def test_c09_manufactured_convergence():
    t0 = time.perf_counter()
    space = parse_config({"preset": "manufactured-smooth"})
    timecfg = parse_config({"preset": "manufactured-smooth", "domain": {"cells": [128]},
                            "manufactured": {"form": "exp-decay", "study": "time", "rate": 1.0},
                            "solver": {"T": 1.0, "dt": 0.1}})
    orders = {}
    for name, cfg in (("space", space), ("time", timecfg)):
        sizes, errors = [], []
        for lev in range(3):
            spec = build_spec(cfg, lev)
            errors.append(max_error(spec, simulate(spec)))
            sizes.append(spec.config.dt if name == "time" else max(spec.grid.h))
        orders[name] = min(observed_orders(sizes, errors))
    dt = time.perf_counter() - t0
    assert any(space["fluid"]["gravity"])  # drift active
    ok = orders["space"] >= 1.8 and orders["time"] >= 0.9 and dt < 120
    record("C9", ok, f"two-term, lam=5/12, drift on: space order {orders['space']:.3f} >= 1.8, "
           f"time order {orders['time']:.3f} >= 0.9, runtime < 2 min", t0)
    assert ok


def _reports(name, levels=2):
    cfg = parse_config({"preset": name})
    est = cfg["estimate"]
    out = []
    for lev in range(levels):
        spec = build_spec(cfg, lev)
        prof = profile_for(spec.law, build_model(cfg), spec.data, spec.grid.n, p=est["p"],
                           require_moser=True)
        out.append(estimate_report(spec, simulate(spec), prof, est["alphas"], est["alpha0"],
                                   est["sigma"], est["levels"]))
    return out


@pytest.mark.parametrize("name", ORACLE_SUITE)
def test_c10_calibrated_constants(name):
    t0 = time.perf_counter()
    reps = _reports(name)
    keys = [k for k in reps[0].constants if k.startswith(("C0", "C_Li", "C_grad"))]
    finite = all(math.isfinite(r.constants[k]) for r in reps for k in keys)
    drift = refinement_verdicts(reps, max_drift=0.25)
    stable = all(v.passed for v in drift) and len(drift) >= 3
    ok = finite and stable and all(r.passed for r in reps)
    vals = ", ".join(f"{v.id.split(':')[1]} {v.detail} ({v.constant:.1%})" for v in drift)
    record("C10", ok, f"{name}: constants finite, drift <= 25%: {vals}", t0)
    assert ok


@pytest.mark.parametrize("alpha", [2.0, 4.0])
def test_c10_lebesgue_monotone(alpha):
    t0 = time.perf_counter()
    cfg = parse_config({"preset": "gas-decay", "boundary": {"kind": "constant", "value": -0.05},
                        "source": {"kind": "constant", "value": -0.1}})
    spec = build_spec(cfg)
    assert not any(cfg["fluid"]["gravity"])
    y = np.array([lebesgue_integral(spec.grid, u, alpha) for u in simulate(spec).fields])
    inc = float(np.max(np.diff(y)))
    ok = inc <= 1e-14 * y.max()
    record("C10", ok, f"f = -0.1, B = -0.05, Z = 0: int u^{alpha:g} max step change {inc:.2e} "
           "(non-increasing)", t0)
    assert ok


def test_c11_lebesgue_bound_closed_form():
    t0 = time.perf_counter()
    cfg = parse_config({"preset": "gas-decay"})
    spec = build_spec(cfg)
    prof = profile_for(spec.law, build_model(cfg), spec.data, 1, p=cfg["estimate"]["p"])
    alpha, C0 = 6.0, 0.37
    m0 = lebesgue_integral(spec.grid, spec.u0, alpha)
    b = lebesgue_bound(prof, alpha, m0, None, C0)
    nu4 = nu_family(prof, alpha).nu4
    C1 = 1 / (4 * C0 * nu4)
    eV = abs(float(b.V(0.0)) - (1 + m0))
    eT = abs(b.T_star - C1 * (1 + m0) ** (-nu4)) / b.T_star
    ok = eV == 0.0 and eT <= 4 * np.finfo(float).eps
    record("C11", ok, f"V(0) - (1 + int u0^alpha) = {eV:.1e}, relative T* mismatch {eT:.1e}", t0)
    assert ok


def test_c12_admissibility_rejections():
    t0 = time.perf_counter()
    msgs = []
    try:
        profile_for(ForchheimerLaw.two_term(), derive_parameters("ideal"),
                    zero_data(zero_drift()), 1)
    except AdmissibilityError as exc:
        msgs.append(exc)
    try:
        build_profile(2 / 3, 5 / 12, 3, 0.0, p=(1.1, 1.1, 1.3, 1.3), require_moser=True)
    except AdmissibilityError as exc:
        msgs.append(exc)
    conds = [m.condition for m in msgs]
    ok = conds == ["a > delta", "kappa_*^2 < kappa_f"] and all(c in str(m) for c, m in
                                                               zip(conds, msgs))
    record("C12", ok, f"rejections cite {conds}", t0)
    assert ok
