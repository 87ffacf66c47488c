"""Generalized Forchheimer constitutive kernel.

The momentum law is written as ``g(|m|) m = -grad(u) - Z`` where

    g(s) = a_0 s^{alpha_0} + a_1 s^{alpha_1} + ... + a_N s^{alpha_N}

Solving for the mass flux gives ``m = -K(|G|) G`` with the conductivity
``K(xi) = 1 / g(s(xi))``, ``s(xi)`` being the unique non-negative root of
``s g(s) = xi``.  This module evaluates ``g``, ``s``, ``K``, the energy
integrand ``H(xi) = int_0^{xi^2} K(sqrt(s)) ds`` and empirical fits of the
structural constants bounding ``K``.

All evaluators accept scalars or numpy arrays and return the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate


class ConstitutiveError(ValueError):
    """Invalid Forchheimer law or argument outside the domain of a kernel."""


class RootSearchError(RuntimeError):
    """The bracketed search for ``s(xi)`` failed to converge."""


@dataclass(frozen=True)
class ForchheimerLaw:
    """Generalized polynomial ``g(s) = sum a_i s^{alpha_i}``.

    Parameters
    ----------
    exponents : sequence of float
        Strictly increasing, first entry ``>= 0``.
    coefficients : sequence of float
        Strictly positive, same length as ``exponents``.

    A single term with exponent 0 is the Darcy limit (``K`` constant); it is
    accepted so that the heat equation can be used as an oracle.
    """

    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(float(e) for e in self.exponents)
        coefs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coefs)
        if len(exps) == 0 or len(exps) != len(coefs):
            raise ConstitutiveError(
                "exponents and coefficients must be non-empty and of equal length")
        if exps[0] < 0:
            raise ConstitutiveError("smallest exponent must be >= 0")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise ConstitutiveError("exponents must be strictly increasing")
        if any(not np.isfinite(c) or c <= 0 for c in coefs):
            raise ConstitutiveError("coefficients must be strictly positive")

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "ForchheimerLaw":
        """Build from ``[(exponent, coefficient), ...]`` in any order."""
        pairs = sorted((float(e), float(c)) for e, c in pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @classmethod
    def darcy(cls, a0: float = 1.0) -> "ForchheimerLaw":
        return cls((0.0,), (a0,))

    @classmethod
    def two_term(cls, a0: float = 1.0, a1: float = 1.0) -> "ForchheimerLaw":
        return cls((0.0, 1.0), (a0, a1))

    @classmethod
    def three_term(cls, a0: float = 1.0, a1: float = 1.0,
                   a2: float = 1.0) -> "ForchheimerLaw":
        return cls((0.0, 1.0, 2.0), (a0, a1, a2))

    @classmethod
    def power(cls, m: float, a0: float = 1.0, d: float = 1.0) -> "ForchheimerLaw":
        """Forchheimer power law ``a0 + d s^{m-1}``, ``1 < m < 2``."""
        return cls((0.0, m - 1.0), (a0, d))

    @property
    def N(self) -> int:
        return len(self.exponents) - 1

    @property
    def a0(self) -> float:
        return self.coefficients[0]

    @property
    def degeneracy(self) -> float:
        """Degeneracy exponent ``a = alpha_N / (alpha_N + 1)`` in ``[0, 1)``."""
        top = self.exponents[-1]
        return top / (top + 1.0)

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.exponents, self.coefficients))

    @property
    def is_darcy(self) -> bool:
        return self.N == 0 and self.exponents[0] == 0.0


def _as_nonneg(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ConstitutiveError(f"{name} must be non-negative")
    return arr


def _power(s, e):
    # 0**0 == 1 in numpy, which is the convention we want for alpha_0 = 0
    return np.power(s, e) if e != 0.0 else np.ones_like(s)


def eval_g(law: ForchheimerLaw, s):
    """Evaluate ``g(s) = sum a_i s^{alpha_i}`` for ``s >= 0``."""
    s = _as_nonneg(s, "s")
    out = np.zeros_like(s)
    for e, c in zip(law.exponents, law.coefficients):
        out = out + c * _power(s, e)
    return out if out.ndim else float(out)


def eval_dg(law: ForchheimerLaw, s):
    """Derivative ``g'(s)``; infinite at ``s = 0`` if some ``0 < alpha_i < 1``."""
    s = _as_nonneg(s, "s")
    out = np.zeros_like(s)
    with np.errstate(divide="ignore"):
        for e, c in zip(law.exponents, law.coefficients):
            if e != 0.0:
                out = out + c * e * _power(s, e - 1.0)
    return out if out.ndim else float(out)


def _sg_and_slope(law, s):
    """Return ``s g(s)`` and ``d/ds [s g(s)] = sum a_i (alpha_i+1) s^alpha_i``."""
    val = np.zeros_like(s)
    slope = np.zeros_like(s)
    for e, c in zip(law.exponents, law.coefficients):
        p = _power(s, e)
        val += c * p * s
        slope += c * (e + 1.0) * p
    return val, slope


def inverse_s(law: ForchheimerLaw, xi, rtol: float = 1e-13, maxiter: int = 200):
    """Unique ``s >= 0`` with ``s g(s) = xi``.

    Safeguarded Newton iteration inside the bracket ``[0, xi/a_0 + 1]``.
    ``phi(s) = s g(s) - xi`` is increasing and convex, so Newton started from
    an upper bound decreases monotonically onto the root; a bisection step is
    taken whenever an iterate leaves the current bracket.
    """
    xi = _as_nonneg(xi, "xi")
    scalar, shape = xi.ndim == 0, xi.shape
    xi = xi.astype(float).ravel()
    if law.is_darcy:
        s = xi / law.a0
        return float(s[0]) if scalar else s.reshape(shape)

    lo = np.zeros_like(xi)
    hi = xi / law.a0 + 1.0
    # both are upper bounds because s g(s) >= a_0 s and >= a_N s^{alpha_N+1}
    s = np.minimum(xi / law.a0,
                   (xi / law.coefficients[-1]) ** (1.0 / (law.exponents[-1] + 1.0)))
    tol = rtol * (1.0 + xi)
    active = xi > 0
    s[~active] = 0.0
    for _ in range(maxiter):
        if not active.any():
            break
        sa = s[active]
        val, slope = _sg_and_slope(law, sa)
        res = val - xi[active]
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(res < 0, np.maximum(lo_a, sa), lo_a)
        hi_a = np.where(res > 0, np.minimum(hi_a, sa), hi_a)
        new = sa - res / slope
        outside = ~((new > lo_a) & (new < hi_a))
        new = np.where(outside, 0.5 * (lo_a + hi_a), new)
        done = np.abs(res) <= tol[active]
        new = np.where(done, sa, new)
        s[active] = new
        lo[active], hi[active] = lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    if active.any():
        raise RootSearchError(
            f"inverse_s did not converge for {int(active.sum())} arguments")
    return float(s[0]) if scalar else s.reshape(shape)


def eval_K(law: ForchheimerLaw, xi):
    """Conductivity ``K(xi) = 1 / g(s(xi))``; ``K(0) = 1/a_0`` exactly."""
    xi = _as_nonneg(xi, "xi")
    if law.is_darcy:
        out = np.full_like(xi, 1.0 / law.a0)
        return out if out.ndim else float(out)
    s = np.asarray(inverse_s(law, xi))
    out = 1.0 / np.asarray(eval_g(law, s))
    return out if out.ndim else float(out)


def _h_integrand(law):
    # ds/g(t) with s = (t g(t))^2 gives 2 t (g(t) + t g'(t)) dt
    terms = [(2.0 * c * (e + 1.0), e) for e, c in zip(law.exponents, law.coefficients)]

    def f(t):
        return t * sum(w * t ** e for w, e in terms)
    return f


def eval_H(law: ForchheimerLaw, xi, method: str = "quad", rtol: float = 1e-12):
    """Energy integrand ``H(xi) = int_0^{xi^2} K(sqrt(s)) ds``.

    With the substitution ``s = (t g(t))^2`` the integral becomes
    ``int_0^{s(xi)} 2 t (g(t) + t g'(t)) dt``.

    method : {"quad", "exact"}
        ``"quad"`` integrates the substituted form adaptively (QUADPACK);
        ``"exact"`` uses the antiderivative
        ``sum 2 a_i (alpha_i + 1) S^{alpha_i+2} / (alpha_i + 2)``,
        which is what the monitors use on large grids.
    """
    xi = _as_nonneg(xi, "xi")
    S = np.asarray(inverse_s(law, xi), dtype=float).ravel()
    if method == "exact":
        out = np.zeros_like(S)
        for e, c in zip(law.exponents, law.coefficients):
            out += 2.0 * c * (e + 1.0) * S ** (e + 2.0) / (e + 2.0)
    elif method == "quad":
        out = np.empty_like(S)
        f = _h_integrand(law)
        for k, upper in enumerate(S):
            if upper == 0.0:
                out[k] = 0.0
                continue
            # split at t = 1 where the dominant power changes
            pts = [0.0] + ([1.0] if upper > 1.0 else []) + [upper]
            total = 0.0
            for lo, hi in zip(pts, pts[1:]):
                val, err = integrate.quad(f, lo, hi,
                                          epsabs=0.0, epsrel=rtol, limit=200)
                total += val
            out[k] = total
    else:
        raise ValueError(f"unknown method {method!r}")
    return out.reshape(xi.shape) if xi.ndim else float(out[0])


@dataclass(frozen=True)
class KBoundFit:
    d1: float
    d2: float
    d3: float
    a: float


def log_grid(xi_max: float = 1e8, num: int = 1000, xi_min: float = 1e-6):
    """``[0]`` followed by ``num - 1`` log-spaced points up to ``xi_max``."""
    return np.concatenate([[0.0], np.logspace(np.log10(xi_min), np.log10(xi_max),
                                               num - 1)])


def fit_K_bounds(law: ForchheimerLaw, grid=None) -> KBoundFit:
    """Empirical constants in

        d1/(1+xi)^a <= K(xi) <= d2/(1+xi)^a,
        d3 (xi^{2-a} - 1) <= K(xi) xi^2 <= d2 xi^{2-a}

    sampled on ``grid`` (must reach ``xi >= 1e6``).  ``d3`` is the largest
    value for which the lower bound holds at every grid point.
    """
    grid = log_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or grid.max() < 1e6:
        raise ConstitutiveError("grid must be non-empty and reach xi >= 1e6")
    a = law.degeneracy
    K = np.asarray(eval_K(law, grid))
    scaled = K * (1.0 + grid) ** a
    d1, d2 = float(scaled.min()), float(scaled.max())
    big = grid > 1.0
    d3 = float(np.min(K[big] * grid[big] ** 2 / (grid[big] ** (2.0 - a) - 1.0)))
    return KBoundFit(d1=d1, d2=d2, d3=d3, a=a)
