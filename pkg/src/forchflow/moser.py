"""Moser iteration: sequence-bound engine, exponent ladder and L^inf bounds.

The engine bounds any non-negative sequence obeying

    y_{j+1} <= A^{omega_j / kappa_j} (y_j^{r_j} + y_j^{s_j})^{1 / kappa_j}

by ``(2A)^{G_j abar} max{y_0^{gamma_0...gamma_{j-1}}, y_0^{beta_0...beta_{j-1}}}``
with ``beta_j = r_j/kappa_j``, ``gamma_j = s_j/kappa_j`` and
``abar = sum omega_j / kappa_j``.  The concrete iteration uses the ladder
``beta_j = kappa_tilde^j alpha_0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .exponents import AdmissibilityError, ExponentProfile, nu_family

SeqLike = Union[Sequence[float], np.ndarray, Callable[[int], float]]


class DivergentSequenceError(ValueError):
    """``sum omega_j/kappa_j`` or a product of ratios does not converge."""


def _materialize(seq: SeqLike, J: int) -> np.ndarray:
    if callable(seq):
        return np.array([float(seq(j)) for j in range(J)])
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 0:
        return np.full(J, float(arr))
    if len(arr) < J:
        raise ValueError(f"sequence has {len(arr)} terms, need {J}")
    return arr[:J]


def max_contiguous_product(gamma: np.ndarray) -> np.ndarray:
    """``G_j = max{1, gamma_m ... gamma_n : 1 <= m <= n < j}`` for every ``j``.

    Running-max dynamic program on log-products (best product ending at ``n``
    is ``gamma_n * max(1, best ending at n-1)``).  Entry ``j`` of the result is
    ``G_j``; ``G_0 = G_1 = 1``.
    """
    J = len(gamma)
    G = np.ones(J + 1)
    best_end = -math.inf
    running = 0.0
    for n in range(1, J):
        lg = math.log(gamma[n])
        best_end = lg + max(0.0, best_end)
        running = max(running, best_end)
        G[n + 1] = math.exp(running)
    return G


@dataclass
class GennBound:
    """Per-level bounds ``bounds[j]`` for ``y_j`` (``j = 0..J``) and the limit."""

    bounds: np.ndarray
    limit: float
    abar: float
    beta_prod: np.ndarray
    gamma_prod: np.ndarray
    G: np.ndarray
    A: float


def _tail_converged(terms: np.ndarray, tol: float) -> bool:
    """Heuristic convergence test for a positive series: the last quarter of
    the terms decays and its sum is below ``tol``."""
    k = max(len(terms) // 4, 1)
    tail = np.abs(terms[-k:])
    return bool(tail.sum() < tol)


def genn_bound(y0: float, kappa: SeqLike, r: SeqLike, s: SeqLike, omega: SeqLike,
               A: float, J: int, tol: float = 1e-12, cap: int = 100000) -> GennBound:
    """Closed-form upper bounds for the sequence recursion.

    Sequences may be arrays (a finite family of ``J`` levels, whose sums and
    products are taken over exactly those levels) or callables ``j -> value``
    (an infinite family; ``abar`` and the limiting products are summed until
    the tail is below ``tol``, else :class:`DivergentSequenceError`).

    Returns bounds for ``y_0 .. y_J`` and the bound on ``limsup y_j``.
    """
    if y0 < 0 or A < 1:
        raise ValueError("need y0 >= 0 and A >= 1")
    infinite = any(callable(x) for x in (kappa, r, s, omega))
    L = J
    if infinite:
        L = max(J, 64)
        while True:
            k_arr = _materialize(kappa, L)
            w_arr = _materialize(omega, L)
            b_arr = _materialize(r, L) / k_arr
            g_arr = _materialize(s, L) / k_arr
            if (_tail_converged(w_arr / k_arr, tol)
                    and _tail_converged(np.log(b_arr), tol)
                    and _tail_converged(np.log(g_arr), tol)):
                break
            L *= 2
            if L > cap:
                raise DivergentSequenceError(
                    "series sum omega_j/kappa_j or products of r_j/kappa_j, "
                    f"s_j/kappa_j not converged within {cap} terms")
    k_arr = _materialize(kappa, L)
    r_arr = _materialize(r, L)
    s_arr = _materialize(s, L)
    w_arr = _materialize(omega, L)
    if np.any(k_arr <= 0) or np.any(r_arr <= 0) or np.any(s_arr < r_arr) or np.any(w_arr < 1):
        raise ValueError("need kappa_j > 0, s_j >= r_j > 0, omega_j >= 1")
    beta = r_arr / k_arr
    gamma = s_arr / k_arr
    abar = float(np.sum(w_arr / k_arr))
    logb = np.concatenate([[0.0], np.cumsum(np.log(beta))])
    logg = np.concatenate([[0.0], np.cumsum(np.log(gamma))])
    G_all = max_contiguous_product(gamma)

    logA2 = math.log(2.0 * A)
    bounds = np.empty(J + 1)
    bounds[0] = y0
    for j in range(1, J + 1):
        bounds[j] = _log_bound(G_all[j] * abar * logA2, y0, logg[j], logb[j])
    G_lim = float(G_all[-1])
    limit = _log_bound(G_lim * abar * logA2, y0, logg[-1], logb[-1])
    return GennBound(bounds=bounds, limit=limit, abar=abar,
                     beta_prod=np.exp(logb[:J + 1]), gamma_prod=np.exp(logg[:J + 1]),
                     G=G_all[:J + 1], A=A)


def _exp(x):
    return math.inf if x > 709.0 else math.exp(x)


def _log_bound(log_pre, y0, log_e1, log_e2):
    """``exp(log_pre) * max{y0^e1, y0^e2}`` without overflow (``inf`` if too large)."""
    if y0 == 0.0:
        return 0.0
    ly = math.log(y0)
    if ly == 0.0:
        return _exp(log_pre)
    return _exp(log_pre + max(_exp(log_e1) * ly, _exp(log_e2) * ly))


def _max_power(y0, e1, e2):
    if y0 == 0.0:
        return 0.0
    return max(y0 ** e1, y0 ** e2)


def direct_recursion(y0: float, kappa, r, s, omega, A: float, J: int) -> np.ndarray:
    """Iterate the recursion with equality; used as the oracle for the engine."""
    k, rr, ss, w = (_materialize(x, J) for x in (kappa, r, s, omega))
    y = np.empty(J + 1)
    y[0] = y0
    for j in range(J):
        # log-space evaluation keeps large exponents finite
        if y[j] == 0.0 or math.isinf(y[j]):
            y[j + 1] = y[j]
            continue
        ly = math.log(y[j])
        m = max(rr[j] * ly, ss[j] * ly)
        lsum = m + math.log(math.exp(rr[j] * ly - m) + math.exp(ss[j] * ly - m))
        y[j + 1] = _exp((w[j] * math.log(A) + lsum) / k[j])
    return y


# ---------------------------------------------------------------------------
# concrete schedule

@dataclass
class IterationSchedule:
    """Exponent and time ladders of the Moser iteration."""

    profile: ExponentProfile
    alpha0: float
    T: float
    sigma: float
    levels: int
    beta: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    r_tilde: np.ndarray = field(repr=False)
    s_tilde: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)

    @property
    def kappa_tilde(self) -> float:
        return self.profile.kappa_tilde

    def A(self, M0: float = 1.0, c7: float = 1.0, volume: float = 1.0) -> float:
        """Iteration base ``max{4 kt^{6-a}, 4 c7 (1+|U|) alpha0^{6-a}
        (1 + 1/(sigma T))^2 (1+T)^3 M0^2}``."""
        a, kt = self.profile.a, self.kappa_tilde
        return max(4 * kt ** (6 - a),
                   4 * c7 * (1 + volume) * self.alpha0 ** (6 - a)
                   * (1 + 1 / (self.sigma * self.T)) ** 2 * (1 + self.T) ** 3 * M0 ** 2)


def moser_alpha0_min(profile: ExponentProfile) -> tuple[float, float]:
    """``(strict, inclusive)`` lower limits on ``alpha_0``."""
    p = profile
    strict = max(2.0, p.alpha_star, p.eta1)
    incl = max(p.eta2 / (p.kappa_tilde - p.kappa_star),
               (p.a - p.delta) / (p.kappa_f - p.kappa_tilde ** 2))
    return strict, incl


def build_schedule(profile: ExponentProfile, alpha0: float, T: float, sigma: float,
                   levels: int = 200, check: bool = True) -> IterationSchedule:
    """Ladders ``beta_j = kt^j alpha0``, ``t_j = sigma T (1 - 2^-j)``,
    ``r_j = nu5(beta_j)``, ``s_j = nu7(beta_j)``, ``omega_j = j + 1``.

    ``check=False`` skips the lower limits on ``alpha0`` (and the gain check),
    which is only meant for studying the ladders and products in isolation.
    """
    if not profile.moser_ok:
        raise AdmissibilityError(
            "kappa_*^2 < kappa_f",
            f"kappa_* = {profile.kappa_star:.6g}, kappa_f = {profile.kappa_f:.6g}")
    if not (0 < sigma < 1) or not T > 0:
        raise ValueError("need 0 < sigma < 1 and T > 0")
    strict, incl = moser_alpha0_min(profile)
    p = profile
    j = np.arange(levels + 2)
    beta = p.kappa_tilde ** j * alpha0
    if check:
        _check_alpha0(p, alpha0, strict, beta, levels)
    t = sigma * T * (1 - 2.0 ** (-j[:levels + 1]))
    return IterationSchedule(profile=profile, alpha0=alpha0, T=T, sigma=sigma,
                             levels=levels, beta=beta[:levels + 1], t=t,
                             r_tilde=p.nu5(beta[:levels + 1]),
                             s_tilde=p.nu7(beta[:levels + 1]),
                             omega=(j[:levels + 1] + 1).astype(float))


def _check_alpha0(p, alpha0, strict, beta, levels):
    if not alpha0 > max(2.0, p.alpha_star, p.eta1):
        raise AdmissibilityError("alpha0 > max{2, alpha_*, eta1}",
                                 f"alpha0 = {alpha0:.6g}, bound = {strict:.6g}")
    if not alpha0 >= p.eta2 / (p.kappa_tilde - p.kappa_star):
        raise AdmissibilityError(
            "alpha0 >= eta2/(kappa_tilde-kappa_*)",
            f"alpha0 = {alpha0:.6g}, bound = {p.eta2 / (p.kappa_tilde - p.kappa_star):.6g}")
    if not alpha0 >= (p.a - p.delta) / (p.kappa_f - p.kappa_tilde ** 2):
        raise AdmissibilityError(
            "alpha0 >= (a-delta)/(kappa_f-kappa_tilde^2)",
            f"alpha0 = {alpha0:.6g}, "
            f"bound = {(p.a - p.delta) / (p.kappa_f - p.kappa_tilde ** 2):.6g}")
    # the Sobolev gain must carry beta_j to at least beta_{j+2}
    gain = p.kappa(beta[:levels]) * beta[:levels]
    bad = np.flatnonzero(gain < beta[2:levels + 2] * (1 - 1e-14))
    if bad.size:
        raise AdmissibilityError("kappa(beta_j) beta_j >= beta_{j+2}",
                                 f"fails first at level {int(bad[0])}")


@dataclass(frozen=True)
class LimitProducts:
    mu_tilde: float
    nu_tilde: float
    G: float
    omega: float
    omega1: float
    omega2: float
    omega3: float
    levels_used: int
    tail_bound: float


def _ratios(profile, alpha0, j):
    beta = profile.kappa_tilde ** j * alpha0
    return (profile.nu5(beta) / beta, profile.nu7(beta) / beta, (j + 1) / beta)


def partial_log_products(schedule: IterationSchedule, J: int):
    """``log prod_{j<J} r_j/beta_j`` and ``log prod_{j<J} s_j/beta_j``."""
    j = np.arange(J, dtype=float)
    rb, sb, _ = _ratios(schedule.profile, schedule.alpha0, j)
    return float(np.sum(np.log(rb))), float(np.sum(np.log(sb)))


def limit_products(schedule: IterationSchedule, tol: float = 1e-10,
                   cap: int = 10000) -> LimitProducts:
    """Infinite products ``mu_tilde``, ``nu_tilde``, ``G`` and the weight
    ``omega = G sum (j+1)/beta_j``.

    Levels are added until every factor log is below ``tol / kt^j``; the
    tail is then bounded by a geometric series.  With ``x_j = h1/beta_j``
    and ``y_j = (h2+a-delta)/(beta_j+delta-a)`` the factor logs are bounded
    by ``x_j/(1-x_j)`` and ``y_j``, both decaying at least like ``1/kt``.
    """
    p = schedule.profile
    kt = p.kappa_tilde
    a0 = schedule.alpha0
    log_mu = log_nu = log_G = 0.0
    wsum = 0.0
    for j in range(cap):
        rb, sb, w = _ratios(p, a0, float(j))
        if rb <= 0:
            raise AdmissibilityError("nu5(beta_j) > 0", f"fails at level {j}")
        lr, ls = math.log(rb), math.log(sb)
        log_mu += lr
        log_nu += ls
        if j >= 1:
            log_G += ls
        wsum += w
        beta_next = kt ** (j + 1) * a0
        x = p.h1 / beta_next
        y = (p.h2 + p.a - p.delta) / (beta_next + p.delta - p.a)
        if x >= 1 or beta_next + p.delta - p.a <= 0:
            continue
        geo = 1.0 / (1.0 - 1.0 / kt)
        tail_log = max(x / (1 - x), abs(y)) * geo
        # (j+2)/beta_{j+1} and successive ratios (k+2)/((k+1) kt) <= rho
        rho = (j + 3) / ((j + 2) * kt)
        tail_w = (j + 2) / beta_next / (1 - rho) if rho < 1 else math.inf
        if tail_log < tol and tail_w < tol * max(wsum, 1.0):
            break
    else:
        raise DivergentSequenceError(f"products not converged within {cap} levels")
    G = math.exp(log_G)
    omega = G * wsum
    return LimitProducts(mu_tilde=math.exp(log_mu), nu_tilde=math.exp(log_nu), G=G,
                         omega=omega, omega1=2 * omega, omega2=3 * omega,
                         omega3=2 * omega, levels_used=j + 1,
                         tail_bound=max(tail_log, tail_w))


def linf_bound(schedule: IterationSchedule, products: LimitProducts, M0: float,
               data_norm: float, C: float = 1.0) -> float:
    """``C (1 + 1/(sigma T))^w1 (1+T)^w2 M0^w3 max{N^mu, N^nu}`` with ``N`` the
    ``L^{kt alpha0}`` space-time norm of the solution on ``(0, T)``."""
    T, sigma = schedule.T, schedule.sigma
    pre = (C * (1 + 1 / (sigma * T)) ** products.omega1 * (1 + T) ** products.omega2
           * M0 ** products.omega3)
    return pre * _max_power(data_norm, products.mu_tilde, products.nu_tilde)


def linf_bound_from_data(schedule: IterationSchedule, products: LimitProducts, M0: float,
                         u0_norm_beta1: float, eps: float, upsilon_series=None,
                         C0: Optional[float] = None, C: float = 1.0,
                         small_data: bool = False) -> float:
    """Bounds of ``||u||_{L^inf(U x (eps, T))}`` in terms of initial data.

    ``u0_norm_beta1`` is ``int u0^{beta1} dx`` with ``beta1 = kt alpha0``.

    * ``small_data=False``: ``C eps^-w1 (1+T)^w2 M0^w3
      max{(int_0^T V)^{mu/beta1}, (int_0^T V)^{nu/beta1}}`` with ``V`` the
      Lebesgue bound at ``beta1`` (requires ``C0``).
    * ``small_data=True``: ``C eps^-w1 (1+T)^{w2 + nu/beta1}
      (1 + ||u0||_{L^beta1})^nu M0^w3``.
    """
    from .exponents import lebesgue_bound

    p = schedule.profile
    T = schedule.T
    beta1 = p.kappa_tilde * schedule.alpha0
    if not 0 < eps < min(1.0, T):
        raise ValueError("need 0 < eps < min(1, T)")
    pre = C * eps ** (-products.omega1) * M0 ** products.omega3
    if small_data:
        norm = u0_norm_beta1 ** (1 / beta1)
        return (pre * (1 + T) ** (products.omega2 + products.nu_tilde / beta1)
                * (1 + norm) ** products.nu_tilde)
    if C0 is None:
        raise ValueError("C0 required for the general form")
    bound = lebesgue_bound(p, beta1, u0_norm_beta1, upsilon_series, C0)
    if T >= bound.T_star:
        return math.inf
    tt = np.linspace(0.0, T, 2001)
    integral = float(trapezoid(bound.V(tt), tt))
    return pre * (1 + T) ** products.omega2 * _max_power(
        integral, products.mu_tilde / beta1, products.nu_tilde / beta1)
