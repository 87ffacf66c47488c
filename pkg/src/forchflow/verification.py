"""Monitored quantities of the a-priori estimates, constant calibration and
inequality checks on simulated trajectories.

All space integrals use the midpoint rule over cells (boundary integrals:
over boundary faces), gradients are centred differences at cell centres and
time integrals use the trapezoidal rule on the sample grid.  Calibrated
constants are the smallest values for which an inequality holds on a run.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .constitutive import ForchheimerLaw, eval_H
from .exponents import (AssumptionError, DataNorms, ExponentProfile, gradsec_profile,
                        nu_family, lebesgue_bound)
from .fluid import Drift, ProblemData
from .moser import IterationSchedule, LimitProducts
from .solver import Grid, ProblemSpec, SolverConfig, Trajectory, flux_vector

# inequality identifiers used in reports
LEBESGUE_INEQUALITY = "lebesgue_differential_inequality"
LEBESGUE_BOUND = "lebesgue_bound"
LEBESGUE_SMALL = "lebesgue_small_data_bound"
LEBESGUE_GRAD_BUDGET = "lebesgue_gradient_budget"
LINF_MOSER = "linf_moser"
GRADIENT_ENERGY = "gradient_energy"
GRADIENT_BOUND = "gradient_bound"

_DESCRIPTIONS = {
    LEBESGUE_INEQUALITY: "d/dt int u^alpha + int |grad u|^{2-a} u^{alpha-lam-1} "
                    "<= C0 (||u||^nu1 + ||u||^nu2 + Upsilon)",
    LEBESGUE_BOUND: "int u^alpha(t) <= V(t) for t < T*",
    LEBESGUE_SMALL: "int u^alpha(t) <= 2 (1 + int u0^alpha) under the small-data condition",
    LEBESGUE_GRAD_BUDGET: "int_0^T int |grad u|^{2-a} u^{alpha-lam-1} <= "
                          "2 (1 + 1/nu4)(1 + int u0^alpha)",
    LINF_MOSER: "sup_{t > sigma T} u <= C (1+1/(sigma T))^w1 (1+T)^w2 M0^w3 "
                "max{N^mu, N^nu}",
    GRADIENT_ENERGY: "I(t) <= 2 Z0 + C {t + 1 + int u^eta3 + int_0^t int u^eta4 "
                     "+ N1 + int_0^t N2}",
    GRADIENT_BOUND: "int |grad u|^{2-a} <= C (Z0 + (t+1)(1 + int u0^eta7) "
                    "+ N1 + int_0^t N2)",
}


# ---------------------------------------------------------------------------
# monitored quantities

def lebesgue_integral(grid: Grid, u, alpha: float) -> float:
    """``int u^alpha dx``."""
    return grid.integrate(np.power(np.maximum(u, 0.0), alpha))


def gradient_integral(grid: Grid, u, a: float) -> float:
    """``int |grad u|^{2-a} dx``."""
    g = np.linalg.norm(grid.cell_gradient(u), axis=-1)
    return grid.integrate(g ** (2 - a))


def weighted_gradient_integral(grid: Grid, u, a: float, alpha: float, lam: float) -> float:
    """``int |grad u|^{2-a} u^{alpha-lam-1} dx``."""
    g = np.linalg.norm(grid.cell_gradient(u), axis=-1)
    return grid.integrate(g ** (2 - a) * np.power(np.maximum(u, 0.0), alpha - lam - 1))


def energy_I(grid: Grid, law: ForchheimerLaw, Z: Drift, u) -> float:
    """``I = int H(|grad u + Z(u)|) dx`` (closed-form antiderivative of H)."""
    G = grid.cell_gradient(u)
    if not Z.is_zero:
        G = G + Z(u)
    return grid.integrate(eval_H(law, np.linalg.norm(G, axis=-1), method="exact"))


def boundary_trace(grid: Grid, u) -> np.ndarray:
    """Boundary-face values of ``u`` by linear extrapolation, clamped at 0."""
    return np.maximum(1.5 * u[grid.bface_cell] - 0.5 * u[grid.bface_inner], 0.0)


def initial_energy_Z0(grid: Grid, law, lam: float, data: ProblemData, u0) -> float:
    """``int u0^{lam+1} + I(0) + int_Gamma (phi1(x,0) u0 + phi2(x,0) u0^{ell_B+1})``."""
    tr = boundary_trace(grid, u0)
    xb = grid.bface_x
    bnd = (np.asarray(data.phi1(xb, 0.0)) * tr
           + np.asarray(data.phi2(xb, 0.0)) * tr ** (data.ell_B + 1))
    return (lebesgue_integral(grid, u0, lam + 1) + energy_I(grid, law, data.Z, u0)
            + grid.integrate_boundary(bnd))


def data_norms(grid: Grid, data: ProblemData, times, q) -> DataNorms:
    """``||phi1(t)||_{L^q1(Gamma)}``, ``||phi2(t)||_{L^q2(Gamma)}``,
    ``||f1(t)||_{L^q3(U)}``, ``||f2(t)||_{L^q4(U)}`` on ``times``."""
    q1, q2, q3, q4 = q
    xb, xc = grid.bface_x, grid.centers
    rows = []
    for t in times:
        rows.append((
            grid.integrate_boundary(np.abs(data.phi1(xb, t)) ** q1) ** (1 / q1),
            grid.integrate_boundary(np.abs(data.phi2(xb, t)) ** q2) ** (1 / q2),
            grid.integrate(np.abs(data.f1(xc, t)) ** q3) ** (1 / q3),
            grid.integrate(np.abs(data.f2(xc, t)) ** q4) ** (1 / q4)))
    arr = np.array(rows).reshape(len(times), 4)
    return DataNorms(np.asarray(times, float), arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3],
                     tuple(q))


def N1_series(grid: Grid, data: ProblemData, times, eta5: float) -> np.ndarray:
    xb = grid.bface_x
    return np.array([grid.integrate_boundary(np.abs(data.phi1(xb, t)) ** eta5
                                             + np.abs(data.phi2(xb, t)) ** 2)
                     for t in times])


def N2_series(grid: Grid, data: ProblemData, times, eta5: float, eta6: float) -> np.ndarray:
    xb, xc = grid.bface_x, grid.centers
    n1 = N1_series(grid, data, times, eta5)
    extra = np.array([
        grid.integrate_boundary(np.abs(data.phi3(xb, t)) ** eta5
                                + np.abs(data.phi4(xb, t)) ** 2)
        + grid.integrate(np.abs(data.f1(xc, t)) ** eta6 + np.abs(data.f2(xc, t)) ** 4)
        for t in times])
    return n1 + extra


def time_derivative(times, values) -> np.ndarray:
    """Centred differences on the sample grid, one-sided at the ends."""
    times = np.asarray(times, float)
    if len(times) < 2:
        return np.zeros(len(times))
    return np.gradient(np.asarray(values, float), times, edge_order=1)


def spacetime_norm(grid: Grid, times, fields, p: float) -> float:
    """``||u||_{L^p(U x (0,T))}`` with trapezoidal time integration."""
    vals = [lebesgue_integral(grid, u, p) for u in fields]
    return float(trapezoid(vals, times)) ** (1 / p) if len(times) > 1 else 0.0


# ---------------------------------------------------------------------------
# verdicts and reports

@dataclass
class Verdict:
    id: str
    passed: bool
    constant: Optional[float] = None
    detail: str = ""
    skipped: bool = False

    def as_dict(self) -> dict:
        return {"id": self.id, "passed": self.passed, "skipped": self.skipped,
                "constant": self.constant, "detail": self.detail,
                "inequality": _DESCRIPTIONS.get(self.id.split("[")[0], "")}


@dataclass
class EstimateReport:
    times: np.ndarray
    series: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    min_u: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed or v.skipped for v in self.verdicts)

    def as_dict(self) -> dict:
        return {"meta": self.meta, "min_u": self.min_u,
                "times": [float(t) for t in self.times],
                "series": {k: [float(x) for x in v] for k, v in self.series.items()},
                "constants": {k: (None if v is None else float(v))
                              for k, v in self.constants.items()},
                "verdicts": [v.as_dict() for v in self.verdicts]}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)

    def render(self) -> str:
        lines = [f"{'inequality':<36} {'verdict':<8} {'constant':>14}  detail"]
        for v in self.verdicts:
            tag = "SKIP" if v.skipped else ("PASS" if v.passed else "FAIL")
            c = "" if v.constant is None else f"{v.constant:.6g}"
            lines.append(f"{v.id:<36} {tag:<8} {c:>14}  {v.detail}")
        lines.append(f"min u over run: {self.min_u:.6g}")
        return "\n".join(lines)


def relative_drift(c1: float, c2: float) -> float:
    """``|c1 - c2| / max(|c1|, |c2|)``, zero when both vanish."""
    m = max(abs(c1), abs(c2))
    return 0.0 if m == 0 else abs(c1 - c2) / m


def _max_ratio(num, den):
    """Smallest ``C >= 0`` with ``num <= C den`` where ``den > 0``."""
    num, den = np.asarray(num, float), np.asarray(den, float)
    ok = den > 0
    if not ok.any():
        return 0.0
    return float(max(0.0, np.max(num[ok] / den[ok])))


# ---------------------------------------------------------------------------
# Lebesgue estimates

@dataclass
class LebesgueInequalityResult:
    C0: float
    lhs: np.ndarray
    bracket: np.ndarray
    verdict: Verdict


def _upsilon_on(norms: Optional[DataNorms], times):
    if norms is None:
        return np.zeros(len(times))
    return np.interp(times, norms.times, norms.upsilon_series())


def monitor_lebesgue_inequality(traj: Trajectory, alpha: float, profile: ExponentProfile,
                    norms: Optional[DataNorms] = None) -> LebesgueInequalityResult:
    """Calibrate ``C0`` in the differential inequality for ``int u^alpha``."""
    fam = nu_family(profile, alpha)
    g, times = traj.grid, np.asarray(traj.times, float)
    y = np.array([lebesgue_integral(g, u, alpha) for u in traj.fields])
    D = np.array([weighted_gradient_integral(g, u, profile.a, alpha, profile.lam)
                  for u in traj.fields])
    lhs = time_derivative(times, y) + D
    nrm = y ** (1 / alpha)
    bracket = nrm ** fam.nu1 + nrm ** fam.nu2 + _upsilon_on(norms, times)
    C0 = _max_ratio(lhs, bracket)
    v = Verdict(LEBESGUE_INEQUALITY, bool(np.isfinite(C0)), C0,
                f"alpha = {alpha:g}, nu1 = {fam.nu1:.6g}, nu2 = {fam.nu2:.6g}")
    return LebesgueInequalityResult(C0, lhs, bracket, v)


def check_lebesgue_bound(traj: Trajectory, alpha: float, profile: ExponentProfile, C0: float,
                    norms: Optional[DataNorms] = None) -> list[Verdict]:
    """Check the Lebesgue bound ``V(t)`` and, when the run is short enough,
    the small-data bound and the space-time gradient budget."""
    g, times = traj.grid, np.asarray(traj.times, float)
    y = np.array([lebesgue_integral(g, u, alpha) for u in traj.fields])
    ups = None if norms is None else norms
    bound = lebesgue_bound(profile, alpha, y[0], ups, C0, horizon=times[-1])
    out = []
    inside = times < bound.T_star
    V = np.asarray(bound.V(times[inside]))
    ok = bool(np.all(y[inside] <= V * (1 + 1e-12)))
    out.append(Verdict(LEBESGUE_BOUND, ok, C0,
                       f"T* = {bound.T_star:.6g}, checked {int(inside.sum())} samples"))
    small = times <= bound.T_small
    if small.all():
        ok2 = bool(np.all(y <= bound.constant_bound))
        D = np.array([weighted_gradient_integral(g, u, profile.a, alpha, profile.lam)
                      for u in traj.fields])
        budget = float(trapezoid(D, times)) if len(times) > 1 else 0.0
        ok3 = budget <= bound.gradient_budget
        out.append(Verdict(LEBESGUE_SMALL, ok2, None,
                           f"max int u^alpha = {y.max():.6g} <= {bound.constant_bound:.6g}"))
        out.append(Verdict(LEBESGUE_GRAD_BUDGET, bool(ok3), None,
                           f"{budget:.6g} <= {bound.gradient_budget:.6g}"))
    else:
        msg = f"horizon {times[-1]:.6g} exceeds small-data horizon {bound.T_small:.6g}"
        out.append(Verdict(LEBESGUE_SMALL, False, None, msg, skipped=True))
        out.append(Verdict(LEBESGUE_GRAD_BUDGET, False, None, msg, skipped=True))
    return out


# ---------------------------------------------------------------------------
# maximum estimate

@dataclass
class LinfResult:
    C_Li: float
    sup: float
    norm: float
    shape: float
    verdict: Verdict


def linf_shape(schedule: IterationSchedule, products: LimitProducts, M0: float,
               norm: float) -> float:
    """Right side of the maximum estimate with ``C = 1``."""
    from .moser import linf_bound
    return linf_bound(schedule, products, M0, norm, C=1.0)


def check_linf(traj: Trajectory, schedule: IterationSchedule, products: LimitProducts,
               M0: float, C_Li: Optional[float] = None) -> LinfResult:
    """Calibrate (or, given ``C_Li``, check) the maximum estimate on
    ``U x (sigma T, T)``; ``ess sup`` is the maximum over cells and samples."""
    g, times = traj.grid, np.asarray(traj.times, float)
    T = schedule.T
    cut = schedule.sigma * T
    keep = (times >= cut - 1e-14) & (times <= T + 1e-14)
    fields = np.array(traj.fields)
    sup = float(fields[keep].max()) if keep.any() else 0.0
    within = times <= T + 1e-14
    norm = spacetime_norm(g, times[within], fields[within],
                          schedule.kappa_tilde * schedule.alpha0)
    shape = linf_shape(schedule, products, M0, norm)
    ratio = 0.0 if sup == 0 else (sup / shape if shape > 0 else math.inf)
    if C_Li is None:
        v = Verdict(LINF_MOSER, bool(np.isfinite(ratio)), ratio,
                    f"sup = {sup:.6g}, norm = {norm:.6g}, sigma = {schedule.sigma:g}")
        return LinfResult(ratio, sup, norm, shape, v)
    ok = sup <= C_Li * shape * (1 + 1e-12)
    v = Verdict(LINF_MOSER, bool(ok), C_Li, f"sup = {sup:.6g} vs {C_Li * shape:.6g}")
    return LinfResult(C_Li, sup, norm, shape, v)


# ---------------------------------------------------------------------------
# gradient estimates

@dataclass
class GradientResult:
    C_grad: float
    C_grad_bound: float
    I: np.ndarray
    Z0: float
    verdicts: list


def check_gradient(traj: Trajectory, law: ForchheimerLaw, lam: float, data: ProblemData,
                   profile: ExponentProfile) -> GradientResult:
    """Calibrate the constants of the energy estimate for ``I(t)`` and of the
    final bound on ``int |grad u|^{2-a}`` (small-data form).

    Raises
    ------
    AssumptionError
        when A2 or A3 is not declared for ``data``, or A3 fails.
    """
    missing = [lv for lv in ("A2", "A3") if lv not in data.level]
    if missing:
        raise AssumptionError(f"gradient estimates need declared {', '.join(missing)}")
    ge = gradsec_profile(profile)
    g, times = traj.grid, np.asarray(traj.times, float)
    fields = traj.fields
    I = np.array([energy_I(g, law, data.Z, u) for u in fields])
    Z0 = initial_energy_Z0(g, law, lam, data, fields[0])
    L3 = np.array([lebesgue_integral(g, u, ge.eta3) for u in fields])
    L4 = np.array([lebesgue_integral(g, u, ge.eta4) for u in fields])
    N1 = N1_series(g, data, times, ge.eta5)
    N2 = N2_series(g, data, times, ge.eta5, ge.eta6)
    cum = lambda v: cumulative_trapezoid(v, times, initial=0.0) if len(times) > 1 else 0 * v
    R = times + 1 + L3 + cum(L4) + N1 + cum(N2)
    C_grad = _max_ratio(I - 2 * Z0, R)
    m7 = lebesgue_integral(g, fields[0], ge.eta7)
    grad = np.array([gradient_integral(g, u, profile.a) for u in fields])
    R2 = Z0 + (times + 1) * (1 + m7) + N1 + cum(N2)
    C_bound = _max_ratio(grad, R2)
    verdicts = [
        Verdict(GRADIENT_ENERGY, bool(np.isfinite(C_grad)), C_grad,
                f"Z0 = {Z0:.6g}, eta3 = {ge.eta3:.6g}, eta4 = {ge.eta4:.6g}"),
        Verdict(GRADIENT_BOUND, bool(np.isfinite(C_bound)), C_bound,
                f"eta7 = {ge.eta7:.6g}, eta8 = {ge.eta8:.6g}"),
    ]
    return GradientResult(C_grad, C_bound, I, Z0, verdicts)


# ---------------------------------------------------------------------------
# manufactured solutions

def _d1(fun, x, axis, h):
    """Fourth-order central difference of ``fun`` along ``axis``."""
    e = np.zeros(x.shape[-1])
    e[axis] = h
    return (-fun(x + 2 * e) + 8 * fun(x + e) - 8 * fun(x - e) + fun(x - 2 * e)) / (12 * h)


def _box_normals(grid: Grid, x):
    """Outward unit normals of boundary points of the box."""
    x = np.atleast_2d(x)
    lo = x
    hi = np.array(grid.extents) - x
    dist = np.concatenate([lo, hi], axis=1)
    k = np.argmin(dist, axis=1)
    nrm = np.zeros_like(x)
    ax = k % grid.n
    nrm[np.arange(len(x)), ax] = np.where(k < grid.n, -1.0, 1.0)
    return nrm


def manufactured_case(u_star: Callable, grid: Grid, law: ForchheimerLaw, lam: float,
                      Z: Drift, T: float, config: SolverConfig,
                      grad: Optional[Callable] = None, dudt: Optional[Callable] = None,
                      hx: float = 2e-4, hdiv: float = 2e-3, ht: float = 1e-3,
                      ell_B: float = 0.0, ell_f: float = 0.0) -> ProblemSpec:
    """Problem whose exact solution is ``u_star(x, t)``.

    ``f = (u*^lam)_t - div(K(|grad u* + Z(u*)|)(grad u* + Z(u*)))`` is built
    with fourth-order central differences (unless ``grad``/``dudt`` are
    given) and ``B`` is the outward normal flux of ``u*``.  ``u_star`` must be
    defined on a neighbourhood of the closed box.
    """
    n = grid.n
    probe_t = np.linspace(0.0, T, 5) if T > 0 else np.array([0.0])
    for t in probe_t:
        for pts in (grid.centers, grid.bface_x):
            if np.any(np.asarray(u_star(pts, t)) <= 0):
                raise ValueError("manufactured solution must be positive")

    def G(x, t):
        if grad is not None:
            gu = np.asarray(grad(x, t), float)
        else:
            gu = np.stack([_d1(lambda y: u_star(y, t), x, k, hx) for k in range(n)], axis=-1)
        if not Z.is_zero:
            gu = gu + Z(u_star(x, t))
        return gu

    def F(x, t):
        return flux_vector(law, G(x, t))

    def source(x, t, u=None):
        x = np.atleast_2d(np.asarray(x, float))
        us = u_star(x, t)
        if dudt is not None:
            ut = np.asarray(dudt(x, t), float)
        else:
            ut = (-u_star(x, t + 2 * ht) + 8 * u_star(x, t + ht)
                  - 8 * u_star(x, t - ht) + u_star(x, t - 2 * ht)) / (12 * ht)
        wt = lam * np.power(us, lam - 1) * ut
        div = sum(_d1(lambda y, k=k: F(y, t)[..., k], x, k, hdiv) for k in range(n))
        return wt - div

    def boundary(x, t, u=None):
        x = np.atleast_2d(np.asarray(x, float))
        return np.sum(F(x, t) * _box_normals(grid, x), axis=-1)

    Fabs = lambda x, t: np.abs(boundary(x, t))
    fabs = lambda x, t: np.abs(source(x, t))
    data = ProblemData(Z=Z, B=boundary, f=source, ell_B=ell_B, ell_f=ell_f,
                       phi1=Fabs, f1=fabs, level=("A1",))
    return ProblemSpec(grid=grid, law=law, lam=lam, data=data,
                       u0=lambda x: u_star(x, 0.0), T=T, config=config,
                       exact=u_star)


@dataclass
class ConvergenceStudy:
    sizes: list
    errors: list
    orders: list

    @property
    def min_order(self) -> float:
        return float(min(self.orders)) if self.orders else math.nan

    def table(self) -> str:
        lines = [f"{'size':>10} {'error':>14} {'order':>8}"]
        for k, (s, e) in enumerate(zip(self.sizes, self.errors)):
            o = "" if k == 0 else f"{self.orders[k - 1]:.3f}"
            lines.append(f"{s:>10.6g} {e:>14.6e} {o:>8}")
        return "\n".join(lines)


def observed_orders(sizes, errors) -> list:
    """``log(e_k/e_{k+1}) / log(s_k/s_{k+1})`` for successive levels."""
    return [math.log(errors[k] / errors[k + 1]) / math.log(sizes[k] / sizes[k + 1])
            for k in range(len(errors) - 1)]


def max_error(spec: ProblemSpec, traj: Trajectory) -> float:
    """Max over cells of ``|u - u*|`` at the final time."""
    t = traj.times[-1]
    exact = spec.exact(spec.grid.centers, t)
    return float(np.abs(traj.fields[-1] - exact).max())


# ---------------------------------------------------------------------------
# full report for one run

def estimate_report(spec: ProblemSpec, traj: Trajectory, profile: ExponentProfile,
                    alphas: Sequence[float] = (), alpha0: Optional[float] = None,
                    sigma: float = 0.5, levels: int = 200,
                    meta: Optional[dict] = None) -> EstimateReport:
    """Monitor series, calibrated constants and verdicts for one trajectory.

    ``C0`` is calibrated per ``alpha`` and then used in the Lebesgue bound;
    ``C_Li`` needs ``alpha0`` and Moser admissibility; the gradient constants
    need declared A2 and A3 (otherwise skip entries are recorded).
    """
    from .exponents import AdmissibilityError
    from .moser import build_schedule, limit_products

    g, times = traj.grid, np.asarray(traj.times, float)
    a = profile.a
    fields = traj.fields
    norms = data_norms(g, spec.data, times, profile.q)
    rep = EstimateReport(times=times, meta=dict(meta or {}))
    rep.min_u = float(np.min(fields))
    rep.series["upsilon"] = norms.upsilon_series()
    rep.series["grad_integral"] = np.array([gradient_integral(g, u, a) for u in fields])
    rep.series["I"] = np.array([energy_I(g, spec.law, spec.data.Z, u) for u in fields])
    M0 = norms.M0(a, times[-1])
    rep.constants["M0"] = M0
    rep.constants["Z0"] = initial_energy_Z0(g, spec.law, spec.lam, spec.data, fields[0])

    for alpha in alphas:
        tag = f"{alpha:g}"
        rep.series[f"int_u^{tag}"] = np.array([lebesgue_integral(g, u, alpha) for u in fields])
        rep.series[f"weighted_grad_{tag}"] = np.array(
            [weighted_gradient_integral(g, u, a, alpha, spec.lam) for u in fields])
        try:
            res = monitor_lebesgue_inequality(traj, alpha, profile, norms)
        except AdmissibilityError as exc:
            rep.verdicts.append(Verdict(LEBESGUE_INEQUALITY, False, None, str(exc), skipped=True))
            continue
        rep.constants[f"C0[{tag}]"] = res.C0
        res.verdict.id = f"{LEBESGUE_INEQUALITY}[{tag}]"
        rep.verdicts.append(res.verdict)
        for v in check_lebesgue_bound(traj, alpha, profile, res.C0, norms):
            v.id = f"{v.id}[{tag}]"
            rep.verdicts.append(v)

    if alpha0 is not None and times[-1] > 0:
        try:
            sched = build_schedule(profile, alpha0, float(times[-1]), sigma, levels)
            prods = limit_products(sched)
            li = check_linf(traj, sched, prods, M0)
            rep.constants["C_Li"] = li.C_Li
            rep.constants["mu_tilde"] = prods.mu_tilde
            rep.constants["nu_tilde"] = prods.nu_tilde
            rep.constants["omega"] = prods.omega
            rep.verdicts.append(li.verdict)
        except AdmissibilityError as exc:
            rep.verdicts.append(Verdict(LINF_MOSER, False, None, str(exc), skipped=True))

    try:
        gr = check_gradient(traj, spec.law, spec.lam, spec.data, profile)
        rep.constants["C_grad"] = gr.C_grad
        rep.constants["C_grad_bound"] = gr.C_grad_bound
        rep.verdicts.extend(gr.verdicts)
    except (AssumptionError, AdmissibilityError) as exc:
        for vid in (GRADIENT_ENERGY, GRADIENT_BOUND):
            rep.verdicts.append(Verdict(vid, False, None, str(exc), skipped=True))
    return rep


CALIBRATED = ("C0", "C_Li", "C_grad", "C_grad_bound")


def refinement_verdicts(reports: Sequence[EstimateReport], max_drift: float = 0.25) -> list:
    """Stability of every calibrated constant across successive refinements."""
    out = []
    for k in range(len(reports) - 1):
        r1, r2 = reports[k], reports[k + 1]
        for name in sorted(set(r1.constants) & set(r2.constants)):
            if not name.startswith(CALIBRATED):
                continue
            c1, c2 = r1.constants[name], r2.constants[name]
            d = relative_drift(c1, c2)
            ok = bool(np.isfinite(c1) and np.isfinite(c2) and d <= max_drift)
            out.append(Verdict(f"refinement_stability:{name}:{k}->{k + 1}", ok, d,
                               f"{c1:.6g} -> {c2:.6g}"))
    return out
