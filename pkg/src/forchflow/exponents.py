"""Exponent arithmetic of the Lebesgue, maximum and gradient estimates.

Everything here is closed-form arithmetic on

    a      degeneracy exponent of the Forchheimer law
    lam    time-derivative exponent, delta = 1 - lam
    n      space dimension
    ell_Z, ell_B, ell_f   growth exponents of the drift, boundary flux, source
    p1..p4 Young exponents (q1..q4 their conjugates)

Generic constants of the estimates (the one in the differential inequality,
the Moser-iteration constant, ...) are never fixed here; they are inputs and
the verification module measures them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid


class AdmissibilityError(ValueError):
    """A structural inequality required by the estimates fails.

    ``condition`` holds the violated inequality in plain text, e.g.
    ``"a > delta"``.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        self.detail = detail
        msg = f"violated: {condition}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class AssumptionError(ValueError):
    """A growth assumption required by an estimate is not declared or fails."""


def conjugate(p: float) -> float:
    return p / (p - 1.0)


ETA0_TERMS = (
    "q1*lam",
    "q2*(lam-ell_B)",
    "n*(ell_Z-1)",
    "(-p1*lam+a-delta)/(kappa_f-p1)",
    "(p2*(ell_B-lam)+a-delta)/(kappa_f-p2)",
    "(-p1*lam+a-delta)/(kappa_B-p1)",
    "(p2*(ell_B-lam)+a-delta)/(kappa_B-p2)",
    "(-p3*lam+a-delta)/(kappa_f-p3)",
    "(p4*(ell_f-lam)+a-delta)/(kappa_f-p4)",
)


def eta0_terms(a, lam, n, ell_Z, ell_B, ell_f, p, kappa_B, kappa_f):
    """The nine lower bounds whose maximum is ``eta0`` (listed verbatim,
    including the repeated numerators over both ``kappa_f`` and ``kappa_B``)."""
    p1, p2, p3, p4 = p
    q1, q2 = conjugate(p1), conjugate(p2)
    d = 1 - lam
    return (
        q1 * lam,
        q2 * (lam - ell_B),
        n * (ell_Z - 1),
        (-p1 * lam + a - d) / (kappa_f - p1),
        (p2 * (-lam + ell_B) + a - d) / (kappa_f - p2),
        (-p1 * lam + (a - d)) / (kappa_B - p1),
        (p2 * (-lam + ell_B) + a - d) / (kappa_B - p2),
        (-p3 * lam + a - d) / (kappa_f - p3),
        (p4 * (-lam + ell_f) + a - d) / (kappa_f - p4),
    )


@dataclass(frozen=True)
class NuFamily:
    """Exponents of the differential inequality at a fixed ``alpha``."""

    alpha: float
    mu: tuple[float, ...]
    nu1: float
    nu2: float
    nu3: float
    nu4: float
    theta: float
    binding_mu: int  # 1-based index of the mu attaining nu3


@dataclass(frozen=True)
class ExponentProfile:
    """All derived exponents and thresholds for one configuration."""

    a: float
    lam: float
    n: int
    ell_Z: float
    ell_B: float
    ell_f: float
    p: tuple[float, float, float, float]
    q: tuple[float, float, float, float]
    alpha_star: float
    kappa_B: float
    kappa_f: float
    eta0: float
    eta0_terms: tuple[float, ...]
    eta0_binding: int  # 0-based index into ETA0_TERMS
    kappa_star: float
    eta1: float
    eta2: float
    h1: float
    h2: float
    moser_ok: bool
    kappa_tilde: float = math.nan

    @property
    def delta(self) -> float:
        return 1 - self.lam

    # alpha-dependent quantities ------------------------------------------
    def kappa(self, alpha):
        """Parabolic Sobolev gain ``1 + (2-a)/n - (a-delta)/alpha``."""
        return 1 + (2 - self.a) / self.n - (self.a - self.delta) / alpha

    def theta_tilde(self, alpha):
        return 1 / (1 + alpha * (2 - self.a) / (self.n * (alpha + self.delta - self.a)))

    def nu5(self, alpha):
        return alpha - self.h1

    def nu6(self, alpha):
        return alpha + self.h2

    def nu7(self, alpha):
        return alpha * self.nu6(alpha) / (alpha + self.delta - self.a)

    def lebesgue_alpha_min(self) -> float:
        """Lower limit ``max{2, n a/(1-a)}`` (inclusive) for ``alpha``."""
        return max(2.0, self.n * self.a / (1 - self.a))


def _check_increasing(name, lo, x, hi):
    if not (lo < x < hi):
        raise AdmissibilityError(f"{lo:.6g} < {name} < {hi:.6g}", f"{name} = {x:.6g}")


def default_p(a: float, n: int) -> tuple[float, float, float, float]:
    """Midpoints of the admissible intervals ``(1, kappa_B)`` and ``(1, kappa_f)``."""
    kB = 1 + (1 - a) / n
    kf = 1 + (2 - a) / n
    return ((1 + kB) / 2, (1 + kB) / 2, (1 + kf) / 2, (1 + kf) / 2)


def build_profile(a: float, lam: float, n: int, ell_Z: float, ell_B: float = 0.0,
                  ell_f: float = 0.0, p: Optional[Sequence[float]] = None,
                  require_moser: bool = False) -> ExponentProfile:
    """Compute every fixed exponent of the estimates.

    Raises
    ------
    AdmissibilityError
        if ``a > delta`` fails, a Young exponent leaves its interval, or (with
        ``require_moser``) ``kappa_*^2 < kappa_f`` fails.
    """
    delta = 1 - lam
    if not a > delta:
        raise AdmissibilityError("a > delta", f"a = {a:.6g}, delta = {delta:.6g}")
    if not 0 < lam <= 1:
        raise AdmissibilityError("0 < lam <= 1", f"lam = {lam}")
    kappa_B = 1 + (1 - a) / n
    kappa_f = 1 + (2 - a) / n
    p = tuple(default_p(a, n) if p is None else p)
    if len(p) != 4:
        raise ValueError("need four Young exponents p1..p4")
    _check_increasing("p1", 1, p[0], kappa_B)
    _check_increasing("p2", 1, p[1], kappa_B)
    _check_increasing("p3", 1, p[2], kappa_f)
    _check_increasing("p4", 1, p[3], kappa_f)
    q = tuple(conjugate(pi) for pi in p)
    p1, p2, p3, p4 = p

    terms = eta0_terms(a, lam, n, ell_Z, ell_B, ell_f, p, kappa_B, kappa_f)
    binding = int(np.argmax(terms))

    kappa_star = max(((2 - a) * p1 - 1) / (1 - a), ((2 - a) * p2 - 1) / (1 - a), p3, p4)
    eta1 = max((p1 * lam - a + delta) / ((2 - a) * p1 - 1),
               (p2 * (lam - ell_B) - a + delta) / ((2 - a) * p2 - 1))
    eta2 = max(ell_Z * (2 - a), ell_f, (a - delta + (2 - a) * p2 * ell_B) / (1 - a))
    h1 = max(lam + 1,
             (p1 * lam - a + delta) / (p1 * (2 - a) - 1),
             (p2 * (lam - ell_B) - a + delta) / (p2 * (2 - a) - 1))
    h2 = max(0, ell_Z * (2 - a) - lam - 1, ell_f - lam, ell_B - lam,
             (a - delta - p1 * lam) / (p1 * (2 - a) - 1),
             (a - delta - p2 * (lam - ell_B)) / (p2 * (2 - a) - 1))

    moser_ok = kappa_star ** 2 < kappa_f
    if require_moser and not moser_ok:
        raise AdmissibilityError(
            "kappa_*^2 < kappa_f",
            f"kappa_* = {kappa_star:.6g}, kappa_f = {kappa_f:.6g}; equivalently "
            f"p1,p2 < (1+(1-a)sqrt(kappa_f))/(2-a) = {exchange_p_limit(a, n):.6g} "
            f"and p3,p4 < sqrt(kappa_f) = {math.sqrt(kappa_f):.6g}")
    kappa_tilde = math.sqrt((kappa_star ** 2 + kappa_f) / 2) if moser_ok else math.nan

    return ExponentProfile(
        a=a, lam=lam, n=n, ell_Z=ell_Z, ell_B=ell_B, ell_f=ell_f, p=p, q=q,
        alpha_star=n * (a - delta) / (2 - a), kappa_B=kappa_B, kappa_f=kappa_f,
        eta0=max(terms), eta0_terms=tuple(terms), eta0_binding=binding,
        kappa_star=kappa_star, eta1=eta1, eta2=eta2, h1=h1, h2=h2,
        moser_ok=moser_ok, kappa_tilde=kappa_tilde)


def profile_for(law, model, data, n: int, p=None, require_moser=False) -> ExponentProfile:
    """:func:`build_profile` from a law, a fluid model and problem data."""
    return build_profile(law.degeneracy, model.lam, n, data.ell_Z, data.ell_B,
                         data.ell_f, p=p, require_moser=require_moser)


def exchange_p_limit(a: float, n: int) -> float:
    """Upper limit on ``p1, p2`` from ``((2-a)p - 1)/(1-a) < sqrt(kappa_f)``."""
    kf = 1 + (2 - a) / n
    return (1 + (1 - a) * math.sqrt(kf)) / (2 - a)


def moser_exchange_ok(p: Sequence[float], a: float, n: int) -> bool:
    """Equivalent form of ``kappa_*^2 < kappa_f`` stated on the ``p_i``."""
    kf = 1 + (2 - a) / n
    lim = exchange_p_limit(a, n)
    return (p[0] < lim and p[1] < lim
            and p[2] < math.sqrt(kf) and p[3] < math.sqrt(kf))


def mu_exponents(profile: ExponentProfile, alpha):
    """The seven powers ``mu_1..mu_7`` collecting the lower-order terms."""
    a, lam, d = profile.a, profile.lam, profile.delta
    p1, p2, p3, p4 = profile.p
    lZ, lB, lf = profile.ell_Z, profile.ell_B, profile.ell_f
    return (
        lZ * (2 - a) + alpha - lam - 1,
        p1 * (alpha - lam),
        p2 * (alpha - lam + lB),
        alpha + ((2 - a) * ((p1 - 1) * alpha - p1 * lam) + a - d) / (1 - a),
        alpha + ((2 - a) * ((p2 - 1) * alpha + p2 * (-lam + lB)) + a - d) / (1 - a),
        p3 * (alpha - lam),
        p4 * (alpha - lam + lf),
    )


def nu_from_nu3(profile: ExponentProfile, alpha, nu3):
    """``(theta, nu2, nu4)`` for a given maximal power ``nu3``."""
    a, n, d = profile.a, profile.n, profile.delta
    theta = (nu3 - alpha) / (alpha * (2 - a) / n + d - a)
    nu2 = alpha * (1 + (2 - a) / n * theta / (1 - theta))
    nu4 = (2 - a) * theta / (n * (1 - theta))
    return theta, nu2, nu4


def check_alpha(profile: ExponentProfile, alpha) -> None:
    """Raise unless ``alpha >= max{2, n a/(1-a)}`` and ``alpha > eta0``."""
    lo = profile.lebesgue_alpha_min()
    if not alpha >= lo:
        raise AdmissibilityError("alpha >= max{2, n*a/(1-a)}",
                                 f"alpha = {alpha:.6g}, bound = {lo:.6g}")
    if not alpha > profile.eta0:
        raise AdmissibilityError(
            "alpha > eta0",
            f"alpha = {alpha:.6g}, eta0 = {profile.eta0:.6g} attained by "
            f"{ETA0_TERMS[profile.eta0_binding]}")


def nu_family(profile: ExponentProfile, alpha, check: bool = True) -> NuFamily:
    """Exponents ``nu1..nu4``, ``theta`` and ``mu1..mu7`` at ``alpha``."""
    if check:
        check_alpha(profile, alpha)
    mu = mu_exponents(profile, alpha)
    nu3 = max(mu)
    theta, nu2, nu4 = nu_from_nu3(profile, alpha, nu3)
    return NuFamily(alpha=alpha, mu=tuple(mu), nu1=alpha - profile.lam - 1, nu2=nu2,
                    nu3=nu3, nu4=nu4, theta=theta, binding_mu=int(np.argmax(mu)) + 1)


# ---------------------------------------------------------------------------
# data norms and Upsilon

@dataclass
class DataNorms:
    """Time series of the envelope norms entering ``Upsilon`` and ``M0``.

    ``phi1[k]`` is ``||phi1(t_k)||_{L^{q1}(Gamma)}`` etc.; ``q`` are the
    conjugate exponents used to compute them.
    """

    times: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    q: tuple[float, float, float, float]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in ("phi1", "phi2", "f1", "f2"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float),
                                  self.times.shape).copy()
            if np.any(arr < 0):
                raise ValueError(f"{name} norms must be non-negative")
            setattr(self, name, arr)

    @classmethod
    def zero(cls, times, q):
        z = np.zeros(len(times))
        return cls(times, z, z, z, z, q)

    def upsilon_series(self) -> np.ndarray:
        q1, q2, q3, q4 = self.q
        return self.phi1 ** q1 + self.phi2 ** q2 + self.f1 ** q3 + self.f2 ** q4

    def spacetime_norms(self, T: Optional[float] = None):
        """``||.||_{L^q(Gamma_T)}`` / ``||.||_{L^q(Q_T)}`` by trapezoidal time
        integration of the q-th powers up to ``T`` (default: last sample)."""
        t = self.times
        if T is not None:
            keep = t <= T + 1e-14
            t = t[keep]
        else:
            keep = slice(None)
        out = []
        for arr, qq in zip((self.phi1, self.phi2, self.f1, self.f2), self.q):
            vals = arr[keep] ** qq
            integral = float(trapezoid(vals, t)) if len(t) > 1 else 0.0
            out.append(integral ** (1.0 / qq))
        return tuple(out)

    def M0(self, a: float, T: Optional[float] = None) -> float:
        """``1 + ||phi1||^{(2-a)/(1-a)} + ||phi2||^{(2-a)/(1-a)} + ||f1|| + ||f2||``
        with space-time norms over ``[0, T]``."""
        n1, n2, n3, n4 = self.spacetime_norms(T)
        e = (2 - a) / (1 - a)
        return 1.0 + n1 ** e + n2 ** e + n3 + n4


def upsilon(norms: DataNorms, t: float) -> float:
    """``Upsilon(t)`` linearly interpolated between recorded times."""
    t0, t1 = norms.times[0], norms.times[-1]
    if t < t0 - 1e-14 or t > t1 + 1e-14:
        raise ValueError(f"t = {t} outside recorded grid [{t0}, {t1}]")
    return float(np.interp(t, norms.times, norms.upsilon_series()))


class _Cumulative:
    """``I(t) = int_0^t (1 + Y)`` for piecewise linear ``Y`` (constant past the
    last sample), with its exact inverse."""

    def __init__(self, times=None, values=None):
        if times is None:
            times, values = np.array([0.0]), np.array([0.0])
        self.t = np.asarray(times, dtype=float)
        self.y = 1.0 + np.asarray(values, dtype=float)
        if self.t[0] != 0.0:
            self.t = np.concatenate([[0.0], self.t])
            self.y = np.concatenate([[self.y[0]], self.y])
        seg = 0.5 * (self.y[1:] + self.y[:-1]) * np.diff(self.t)
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.slope = np.append(np.diff(self.y) / np.diff(self.t), 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 1)
        dt = t - self.t[k]
        out = self.cum[k] + self.y[k] * dt + 0.5 * self.slope[k] * dt ** 2
        return out if out.ndim else float(out)

    def inverse(self, level: float) -> float:
        if level <= 0:
            return 0.0
        if math.isinf(level):
            return math.inf
        k = int(np.searchsorted(self.cum, level, side="right") - 1)
        rem = level - self.cum[k]
        y0 = self.y[k]
        if k == len(self.t) - 1:
            return float(self.t[k] + rem / y0)
        slope = self.slope[k]
        if abs(slope) < 1e-300:
            return float(self.t[k] + rem / y0)
        # 0.5 slope dt^2 + y0 dt - rem = 0, stable root
        disc = y0 * y0 + 2 * slope * rem
        dt = 2 * rem / (y0 + math.sqrt(max(disc, 0.0)))
        return float(self.t[k] + dt)


@dataclass
class LebesgueBound:
    """Lebesgue-norm bound for ``alpha``.

    ``T_star`` is the existence horizon of the bound ``V``; ``T_small`` the
    horizon under the small-data condition, on which the constant bound and
    the space-time gradient budget hold.
    """

    alpha: float
    nu4: float
    C0: float
    C1: float
    base: float  # 1 + int u0^alpha
    T_star: float
    T_small: float
    constant_bound: float
    gradient_budget: float
    horizon: Optional[float] = None
    _cum: _Cumulative = field(default=None, repr=False)

    @property
    def small_data(self) -> bool:
        return self.horizon is not None and self.horizon <= self.T_small

    def V(self, t):
        """``{(1+m0)^{-nu4} - I(t)/C1}^{-1/nu4}``; ``inf`` past ``T_star``."""
        t = np.asarray(t, dtype=float)
        if math.isinf(self.C1):
            out = np.full_like(t, self.base)
        else:
            # base * (1 - I/level)^(-1/nu4) with level = C1 base^-nu4; exact at t = 0
            frac = 1.0 - np.asarray(self._cum(t)) / (self.C1 * self.base ** (-self.nu4))
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(frac > 0, self.base * np.abs(frac) ** (-1.0 / self.nu4), np.inf)
        return out if out.ndim else float(out)


def _cumulative(upsilon_series):
    if upsilon_series is None:
        return _Cumulative()
    if isinstance(upsilon_series, DataNorms):
        return _Cumulative(upsilon_series.times, upsilon_series.upsilon_series())
    if np.isscalar(upsilon_series):
        return _Cumulative(np.array([0.0]), np.array([float(upsilon_series)]))
    times, values = upsilon_series
    return _Cumulative(times, values)


def lebesgue_bound(profile: ExponentProfile, alpha, u0_norm: float, upsilon_series,
                    C0: float, horizon: Optional[float] = None,
                    check: bool = True) -> LebesgueBound:
    """Evaluate the Lebesgue bound for the differential inequality with
    constant ``C0``.

    ``u0_norm`` is ``int u0^alpha dx``.  ``upsilon_series`` is ``None`` (zero),
    a constant, a ``(times, values)`` pair or a :class:`DataNorms`.
    """
    fam = nu_family(profile, alpha, check=check)
    nu4 = fam.nu4
    if C0 < 0:
        raise ValueError("C0 must be non-negative")
    C1 = math.inf if C0 == 0 else 1.0 / (4.0 * C0 * nu4)
    base = 1.0 + u0_norm
    cum = _cumulative(upsilon_series)
    T_star = cum.inverse(C1 * base ** (-nu4))
    T_small = cum.inverse(C1 * (1 - 2.0 ** (-nu4)) * base ** (-nu4))
    return LebesgueBound(alpha=alpha, nu4=nu4, C0=C0, C1=C1, base=base,
                          T_star=T_star, T_small=T_small, constant_bound=2 * base,
                          gradient_budget=2 * (1 + 1 / nu4) * base, horizon=horizon,
                          _cum=cum)


# ---------------------------------------------------------------------------
# gradient-estimate exponents

@dataclass(frozen=True)
class GradientExponents:
    eta3: float
    eta4: float
    eta5: float
    eta6: float
    eta7: float
    eta8: float


def gradsec_profile(profile: ExponentProfile) -> GradientExponents:
    """Powers of the gradient estimate; requires ``2 ell_Z > lam + 1``."""
    a, lam, n = profile.a, profile.lam, profile.n
    lZ, lB, lf = profile.ell_Z, profile.ell_B, profile.ell_f
    if not 2 * lZ > lam + 1:
        raise AssumptionError(f"2*ell_Z > lam+1 fails: ell_Z = {lZ}, lam = {lam}")
    eta3 = max((2 - a) * (2 * lB + 1) / (1 - a), (2 - a) * lZ)
    eta4 = max((2 - a) * (2 * lB + 1) / (1 - a), 2 * lZ * (2 - a) / a, 2 * (2 * lf + 1))
    eta5 = 2 * (1 + lB) / (1 + 2 * lB)
    den = 4 * lf + 1 - lam
    # den = 0 only for lam = 1, ell_f = 0; the limit ell_f -> 0+ is 2
    second = 4 * (2 * lf + 1 - lam) / den if den != 0 else 2.0
    eta6 = max(2 * (1 + lf) / (1 + 2 * lf), second)
    eta7 = max(n * a / (1 - a), profile.eta0 + 1, eta4)
    eta8 = nu_family(profile, eta7).nu4
    return GradientExponents(eta3, eta4, eta5, eta6, eta7, eta8)


# ---------------------------------------------------------------------------
# report

_DESCRIPTIONS = {
    "a": "degeneracy exponent alpha_N/(alpha_N+1)",
    "lam": "time-derivative exponent",
    "delta": "1 - lam",
    "n": "space dimension",
    "alpha_star": "n(a-delta)/(2-a), Sobolev threshold",
    "kappa_B": "1 + (1-a)/n",
    "kappa_f": "1 + (2-a)/n",
    "eta0": "lower limit for alpha in the Lebesgue estimate",
    "kappa_star": "largest Holder exchange exponent",
    "kappa_tilde": "sqrt((kappa_*^2 + kappa_f)/2), Moser step ratio",
    "eta1": "Moser start threshold (boundary terms)",
    "eta2": "Moser start threshold (growth)",
    "h1": "loss in the lower power nu5 = alpha - h1",
    "h2": "gain in the upper power nu6 = alpha + h2",
}


def exponent_report(profile: ExponentProfile, alphas: Sequence[float] = ()) -> dict:
    """Machine-readable map of every exponent, with short descriptions."""
    entries = {}
    for key in ("a", "lam", "delta", "n", "alpha_star", "kappa_B", "kappa_f", "eta0",
                "kappa_star", "kappa_tilde", "eta1", "eta2", "h1", "h2"):
        entries[key] = {"value": float(getattr(profile, key)),
                        "description": _DESCRIPTIONS[key]}
    for i, (pi, qi) in enumerate(zip(profile.p, profile.q), start=1):
        entries[f"p{i}"] = {"value": float(pi), "description": "Young exponent"}
        entries[f"q{i}"] = {"value": float(qi), "description": f"conjugate of p{i}"}
    eta0_list = [{"expression": e, "value": float(v),
                  "binding": i == profile.eta0_binding}
                 for i, (e, v) in enumerate(zip(ETA0_TERMS, profile.eta0_terms))]
    per_alpha = {}
    for alpha in alphas:
        try:
            fam = nu_family(profile, alpha)
        except AdmissibilityError as exc:
            per_alpha[repr(float(alpha))] = {"admissible": False, "reason": str(exc)}
            continue
        per_alpha[repr(float(alpha))] = {
            "admissible": True, "nu1": fam.nu1, "nu2": fam.nu2, "nu3": fam.nu3,
            "nu4": fam.nu4, "theta": fam.theta, "mu": list(fam.mu),
            "binding_mu": fam.binding_mu, "kappa": profile.kappa(alpha)}
    try:
        grad = gradsec_profile(profile).__dict__
    except (AssumptionError, AdmissibilityError) as exc:
        grad = {"skipped": str(exc)}
    return {"exponents": entries, "eta0_terms": eta0_list, "moser_ok": profile.moser_ok,
            "per_alpha": per_alpha, "gradient": grad}


def render_table(report: dict) -> str:
    lines = [f"{'symbol':<12} {'value':>22}  description"]
    for key, ent in report["exponents"].items():
        lines.append(f"{key:<12} {ent['value']:>22.15g}  {ent['description']}")
    lines.append("")
    lines.append("eta0 candidates:")
    for ent in report["eta0_terms"]:
        mark = "  <- binding" if ent["binding"] else ""
        lines.append(f"  {ent['expression']:<42} {ent['value']:>18.12g}{mark}")
    return "\n".join(lines)
