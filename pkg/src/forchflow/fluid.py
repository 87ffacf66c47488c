"""Fluid laws, pseudo-pressure parameters and the problem data ``Z, B, f``.

After rescaling time, every fluid considered leads to

    (u^lam)_t = div( K(|grad u + Z(u)|) (grad u + Z(u)) ) + f(x, t, u)

with the flux condition ``K(|grad u + Z|)(grad u + Z) . nu = B(x, t, u)`` on
the boundary.  Gravity enters through ``Z(u) = -c u^ell g_vec``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class FluidModelError(ValueError):
    """Non-physical fluid constants."""


@dataclass(frozen=True)
class FluidModel:
    """Pseudo-pressure parameters of a fluid.

    ``kind`` is ``"isentropic"``, ``"ideal"`` or ``"slightly_compressible"``;
    ``constants`` keeps the physical inputs (``gamma``, ``cbar``, ``kappa``).
    Use :func:`derive_parameters` rather than building this directly.
    """

    kind: str
    lam: float
    ell: float
    c: float
    gravity: tuple[float, ...] = ()
    constants: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return 1.0 - self.lam

    @property
    def gamma(self) -> Optional[float]:
        """Specific heat ratio recovered from ``lam`` (gases only)."""
        if self.kind == "slightly_compressible":
            return None
        return 1.0 / self.lam - 1.0


def derive_parameters(kind: str, gamma: float | None = None, cbar: float = 1.0,
                      kappa: float | None = None, gravity=()) -> FluidModel:
    """Map a physical equation of state to ``(lam, ell, c)``.

    * isentropic ``p = cbar rho^gamma``: ``lam = 1/(gamma+1)``, ``ell = 2 lam``,
      ``c = ((gamma+1)/(cbar gamma))^ell``
    * ideal ``p = cbar rho``: isentropic with ``gamma = 1``
    * slightly compressible, ``(1/rho) drho/dp = 1/kappa``: ``lam = 1``,
      ``ell = 2``, ``c = 1/kappa^2``
    """
    gravity = tuple(float(g) for g in gravity)
    if kind == "ideal":
        if gamma not in (None, 1.0):
            raise FluidModelError("ideal gas has gamma = 1")
        model = derive_parameters("isentropic", gamma=1.0, cbar=cbar, gravity=gravity)
        return FluidModel("ideal", model.lam, model.ell, model.c, gravity,
                          {"cbar": cbar, "gamma": 1.0})
    if kind == "isentropic":
        if gamma is None or not gamma > 0:
            raise FluidModelError("isentropic gas requires gamma > 0")
        if not cbar > 0:
            raise FluidModelError("cbar must be positive")
        lam = 1.0 / (gamma + 1.0)
        ell = 2.0 * lam
        c = ((gamma + 1.0) / (cbar * gamma)) ** ell
        return FluidModel("isentropic", lam, ell, c, gravity,
                          {"gamma": gamma, "cbar": cbar})
    if kind == "slightly_compressible":
        if kappa is None or not kappa > 0:
            raise FluidModelError("slightly compressible fluid requires kappa > 0")
        return FluidModel(kind, 1.0, 2.0, 1.0 / kappa ** 2, gravity, {"kappa": kappa})
    raise FluidModelError(f"unknown fluid kind {kind!r}")


# ---------------------------------------------------------------------------
# problem data

@dataclass(frozen=True)
class Drift:
    """Vector drift ``Z(u) = sign * c u^ell g_vec`` with its A1/A2 constants.

    ``sign = -1`` reproduces the interior equation's ``grad u - c u^ell g``;
    ``sign = +1`` is the convention written in the boundary condition.
    """

    c: float
    ell: float
    gvec: tuple[float, ...]
    sign: float = -1.0

    @property
    def d0(self) -> float:
        return self.c * float(np.linalg.norm(self.gvec)) if self.gvec else 0.0

    @property
    def ell_Z(self) -> float:
        return self.ell

    @property
    def d4(self) -> float:
        return self.ell * self.d0

    @property
    def is_zero(self) -> bool:
        return self.d0 == 0.0

    def __call__(self, u):
        """``Z(u)`` with a trailing axis of length ``n``."""
        u = np.asarray(u, dtype=float)
        mag = self.sign * self.c * np.power(np.maximum(u, 0.0), self.ell)
        g = np.asarray(self.gvec if self.gvec else (0.0,), dtype=float)
        return mag[..., None] * g

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        mag = self.sign * self.c * self.ell * np.power(np.maximum(u, 1e-300), self.ell - 1)
        g = np.asarray(self.gvec if self.gvec else (0.0,), dtype=float)
        return mag[..., None] * g


def gravity_drift(model: FluidModel, sign: float = -1.0) -> Drift:
    """Drift of the fluid model; records ``ell_Z = ell`` and ``d0 = c |g_vec|``."""
    return Drift(model.c, model.ell, model.gravity, sign)


def zero_drift(ell_Z: float = 1.0, n: int = 1) -> Drift:
    return Drift(0.0, ell_Z, (0.0,) * n)


Envelope = Callable[[np.ndarray, float], np.ndarray]


def _zero_env(x, t):
    return np.zeros(np.shape(x)[:-1] if np.ndim(x) > 1 else np.shape(x))


@dataclass
class ProblemData:
    """Drift, boundary flux, source and their declared growth envelopes.

    ``B(x, t, u)`` and ``f(x, t, u)`` act on arrays of points ``x`` with shape
    ``(m, n)``.  The envelopes ``phi1 ... phi4, f1, f2`` take ``(x, t)``.
    ``level`` lists the declared assumption sets, e.g. ``("A1", "A2", "A3")``.
    """

    Z: Drift
    B: Callable
    f: Callable
    ell_B: float = 0.0
    ell_f: float = 0.0
    phi1: Envelope = _zero_env
    phi2: Envelope = _zero_env
    f1: Envelope = _zero_env
    f2: Envelope = _zero_env
    phi3: Envelope = _zero_env
    phi4: Envelope = _zero_env
    dBdt: Optional[Callable] = None
    level: tuple[str, ...] = ("A1",)

    @property
    def d0(self) -> float:
        return self.Z.d0

    @property
    def ell_Z(self) -> float:
        return self.Z.ell_Z


def _zeros_like_x(x):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape[0] if x.ndim > 1 else x.shape)


def zero_data(Z: Drift, ell_B: float = 0.0, ell_f: float = 0.0,
              level=("A1", "A2", "A3")) -> ProblemData:
    z = lambda x, t, u=None: _zeros_like_x(x)
    return ProblemData(Z=Z, B=z, f=z, ell_B=ell_B, ell_f=ell_f,
                       dBdt=z, level=tuple(level))


def constant_data(Z: Drift, B0: float = 0.0, f0: float = 0.0,
                  level=("A1", "A2", "A3"), ell_B: float = 0.0,
                  ell_f: float = 0.0) -> ProblemData:
    """Constant boundary flux ``B0`` and constant source ``f0``."""
    Bfun = lambda x, t, u=None: np.full(_zeros_like_x(x).shape, B0)
    ffun = lambda x, t, u=None: np.full(_zeros_like_x(x).shape, f0)
    return ProblemData(
        Z=Z, B=Bfun, f=ffun, ell_B=ell_B, ell_f=ell_f,
        phi1=lambda x, t: np.full(_zeros_like_x(x).shape, abs(B0)),
        f1=lambda x, t: np.full(_zeros_like_x(x).shape, abs(f0)),
        dBdt=lambda x, t, u=None: _zeros_like_x(x), level=tuple(level))


def volumetric_flux_data(Z: Drift, psi: Callable, lam: float,
                         dpsi_dt: Optional[Callable] = None, f0: float = 0.0,
                         level=("A1", "A2", "A3")) -> ProblemData:
    """Boundary flux ``B = psi(x, t) u^lam`` from a prescribed volumetric flux.

    Satisfies the A1 boundary envelope with ``phi1 = 0``, ``phi2 = |psi|``,
    ``ell_B = lam``.
    """
    dpsi_dt = dpsi_dt or (lambda x, t: _zeros_like_x(x))
    Bfun = lambda x, t, u: psi(x, t) * np.power(np.maximum(u, 0.0), lam)
    dB = lambda x, t, u: dpsi_dt(x, t) * np.power(np.maximum(u, 0.0), lam)
    ffun = lambda x, t, u=None: np.full(_zeros_like_x(x).shape, f0)
    return ProblemData(
        Z=Z, B=Bfun, f=ffun, ell_B=lam, ell_f=0.0,
        phi2=lambda x, t: np.abs(psi(x, t)),
        phi4=lambda x, t: np.abs(dpsi_dt(x, t)),
        f1=lambda x, t: np.full(_zeros_like_x(x).shape, abs(f0)),
        dBdt=dB, level=tuple(level))


# ---------------------------------------------------------------------------
# assumption validation

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ValidationReport:
    level: tuple[str, ...]
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"level": list(self.level), "passed": self.passed,
                "checks": [c.__dict__ for c in self.checks]}


def check_A3(ell_Z: float, lam: float) -> Check:
    """Exact test of ``2 ell_Z > lam + 1``."""
    margin = 2.0 * ell_Z - (lam + 1.0)
    return Check("A3: 2*ell_Z > lam+1", margin > 0, margin)


def _u_grid(u_max, num):
    return np.concatenate([[0.0], np.logspace(-8, math.log10(u_max), num - 1)])


def validate_assumptions(data: ProblemData, model: FluidModel, level=("A1",),
                         boundary_points=None, interior_points=None, times=(0.0,),
                         u_max: float = 1e6, num_u: int = 200,
                         rtol: float = 1e-12) -> ValidationReport:
    """Sample every declared growth inequality and report its worst margin.

    ``margin`` is ``min(envelope - quantity)`` over the sampled ``(x, t, u)``;
    a check passes when ``margin >= -rtol * scale``.  A3 is exact.
    Failures are report entries, never exceptions.
    """
    if isinstance(level, str):
        level = {"A1": ("A1",), "A1+A2": ("A1", "A2"),
                 "A1+A2+A3": ("A1", "A2", "A3")}[level]
    level = tuple(level)
    ug = _u_grid(u_max, num_u)
    checks = []

    Zv = np.linalg.norm(data.Z(ug), axis=-1)
    env = data.d0 * np.power(ug, data.ell_Z)
    checks.append(_margin_check("A1: |Z(u)| <= d0 u^ell_Z", env, Zv, rtol))

    def space_time_checks(points, fun, e1, e2, ell, label, absolute):
        if points is None:
            return
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        for t in times:
            a = e1(pts, t)[:, None]
            b = e2(pts, t)[:, None]
            env = a + b * np.power(ug[None, :], ell)
            val = np.stack([fun(pts, t, np.full(pts.shape[0], u)) for u in ug], axis=1)
            if absolute:
                val = np.abs(val)
            checks.append(_margin_check(f"{label} (t={t:g})", env, val, rtol))

    space_time_checks(boundary_points, data.B, data.phi1, data.phi2, data.ell_B,
                      "A1: B <= phi1 + phi2 u^ell_B", False)
    space_time_checks(interior_points, data.f, data.f1, data.f2, data.ell_f,
                      "A1: f <= f1 + f2 u^ell_f", False)

    if "A2" in level:
        dZ = np.linalg.norm(data.Z.derivative(ug[1:]), axis=-1)
        env = data.Z.d4 * np.power(ug[1:], data.ell_Z - 1.0)
        checks.append(_margin_check("A2: |Z'(u)| <= d4 u^(ell_Z-1)", env, dZ, rtol))
        space_time_checks(boundary_points, data.B, data.phi1, data.phi2, data.ell_B,
                          "A2: |B| <= phi1 + phi2 u^ell_B", True)
        space_time_checks(interior_points, data.f, data.f1, data.f2, data.ell_f,
                          "A2: |f| <= f1 + f2 u^ell_f", True)
        if data.dBdt is not None:
            space_time_checks(boundary_points, data.dBdt, data.phi3, data.phi4,
                              data.ell_B, "A2: |dB/dt| <= phi3 + phi4 u^ell_B", True)
    if "A3" in level:
        checks.append(check_A3(data.ell_Z, model.lam))
    return ValidationReport(level, checks)


def _margin_check(name, env, val, rtol):
    env = np.asarray(env, dtype=float)
    val = np.asarray(val, dtype=float)
    diff = env - val
    margin = float(diff.min()) if diff.size else 0.0
    scale = 1.0 + float(np.max(np.abs(env))) if env.size else 1.0
    return Check(name, margin >= -rtol * scale, margin)
