"""Cell-centred finite-volume solver for the doubly nonlinear flux problem

    (u^lam)_t = div( K(|grad u + Z(u)|) (grad u + Z(u)) ) + f(x, t, u)   in U,
    K(|grad u + Z(u)|) (grad u + Z(u)) . nu = B(x, t, u)                  on Gamma,

on boxes in one or two dimensions.  Backward Euler in time, damped Newton
with a coloured finite-difference Jacobian for the flux part and the exact
derivative of the time term.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .constitutive import ForchheimerLaw, eval_K
from .fluid import ProblemData

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Nonlinear solve failed even after the allowed time-step halvings."""

    def __init__(self, message: str, t: float):
        self.t = t
        super().__init__(f"{message} (t = {t:.6g})")


# ---------------------------------------------------------------------------
# grid

@dataclass
class Grid:
    """Uniform box ``[0, L_0] x [0, L_1]`` (or ``[0, L_0]``).

    Cells are numbered row-major (last axis fastest).
    """

    shape: tuple[int, ...]
    extents: tuple[float, ...]

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.extents = tuple(float(e) for e in self.extents)
        if len(self.shape) not in (1, 2) or len(self.shape) != len(self.extents):
            raise ValueError("grid must be 1D or 2D with matching extents")
        if min(self.shape) < 2 or min(self.extents) <= 0:
            raise ValueError("need at least 2 cells per axis and positive extents")
        self.h = tuple(L / m for L, m in zip(self.extents, self.shape))
        axes = [(np.arange(m) + 0.5) * h for m, h in zip(self.shape, self.h)]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.centers = np.stack([m.ravel() for m in mesh], axis=-1)
        self._build_faces()

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def boundary_measure(self) -> float:
        return float(self.bface_area.sum())

    def index(self, *ij) -> np.ndarray:
        return np.ravel_multi_index(ij, self.shape)

    def _build_faces(self):
        idx = np.arange(self.size).reshape(self.shape)
        left, right, axis = [], [], []
        bcell, bnormal, barea, bx = [], [], [], []
        for ax in range(self.n):
            area = self.cell_volume / self.h[ax]
            lo = [slice(None)] * self.n
            hi = [slice(None)] * self.n
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            left.append(idx[tuple(lo)].ravel())
            right.append(idx[tuple(hi)].ravel())
            axis.append(np.full(left[-1].size, ax))
            for side, sl in ((-1.0, 0), (1.0, -1)):
                sel = [slice(None)] * self.n
                sel[ax] = sl
                cells = idx[tuple(sel)].ravel()
                normal = np.zeros(self.n)
                normal[ax] = side
                xf = self.centers[cells].copy()
                xf[:, ax] = 0.0 if side < 0 else self.extents[ax]
                bcell.append(cells)
                bnormal.append(np.tile(normal, (cells.size, 1)))
                barea.append(np.full(cells.size, area))
                bx.append(xf)
        self.face_left = np.concatenate(left)
        self.face_right = np.concatenate(right)
        self.face_axis = np.concatenate(axis)
        self.face_area = np.array([self.cell_volume / self.h[a] for a in self.face_axis])
        self.bface_cell = np.concatenate(bcell)
        self.bface_normal = np.concatenate(bnormal)
        self.bface_area = np.concatenate(barea)
        self.bface_x = np.concatenate(bx)
        self.bface_axis = np.argmax(np.abs(self.bface_normal), axis=1)
        # inward neighbour of each boundary cell along the face normal
        ijk = np.array(np.unravel_index(self.bface_cell, self.shape)).T
        step = -self.bface_normal.astype(int)
        self.bface_inner = np.ravel_multi_index(tuple((ijk + step).T), self.shape)

    def cell_gradient(self, u) -> np.ndarray:
        """Centred differences at cell centres (one-sided next to the
        boundary); shape ``(size, n)``."""
        U = np.asarray(u, dtype=float).reshape(self.shape)
        comps = np.gradient(U, *self.h, edge_order=1) if self.n > 1 else \
            [np.gradient(U, self.h[0], edge_order=1)]
        return np.stack([c.ravel() for c in comps], axis=-1)

    def integrate(self, values) -> float:
        """Midpoint rule over cells."""
        return float(np.sum(values) * self.cell_volume)

    def integrate_boundary(self, values) -> float:
        """Midpoint rule over boundary faces."""
        return float(np.sum(np.asarray(values) * self.bface_area))


@dataclass
class Field:
    """Cell averages of ``u`` at time ``t``."""

    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite and non-negative")


@dataclass
class SolverConfig:
    """Time step and Newton controls.

    Newton stops when ``dt * max|residual| < tol * (1 + max u)``, a bound on
    the per-step change of ``u^lam`` that does not grow under refinement.
    Values are clamped at ``eps_u`` from below.
    """

    dt: float
    tol: float = 1e-10
    max_iter: int = 30
    eps_u: float = 1e-12
    max_halvings: int = 5
    drift_sign: Optional[float] = None  # overrides the sign carried by Z

    def __post_init__(self):
        if not self.dt > 0 or not self.tol > 0:
            raise ValueError("dt and tol must be positive")
        if self.eps_u < 0:
            raise ValueError("eps_u must be >= 0")
        if self.drift_sign not in (None, 1.0, -1.0):
            raise ValueError("drift_sign must be +1, -1 or None")


# ---------------------------------------------------------------------------
# fluxes

def flux_vector(law: ForchheimerLaw, G):
    """``K(|G|) G`` for gradient-plus-drift vectors ``G`` of shape ``(..., n)``."""
    G = np.asarray(G, dtype=float)
    return np.asarray(eval_K(law, np.linalg.norm(G, axis=-1)))[..., None] * G


def flux(law: ForchheimerLaw, uL: float, uR: float, h: float, Z_face=0.0,
         tangential=()) -> float:
    """Two-point normal flux ``K(|G|) G . e`` through a face with
    ``G = ((uR - uL)/h, tangential...) + Z_face``."""
    G = np.array([(uR - uL) / h, *tangential], dtype=float) + np.asarray(Z_face, dtype=float)
    return float(flux_vector(law, G)[0])


class Discretization:
    """Residual of one backward-Euler step and its Jacobian."""

    def __init__(self, grid: Grid, law: ForchheimerLaw, lam: float, data: ProblemData,
                 eps_u: float = 1e-12):
        self.grid, self.law, self.lam, self.data, self.eps_u = grid, law, lam, data, eps_u
        self._colors = self._coloring()

    # face quantities -----------------------------------------------------
    def _tangential(self, U, ax_t):
        """Centred ``d/dx_{ax_t}`` at cells, one-sided at the ends."""
        return np.gradient(U, self.grid.h[ax_t], axis=ax_t, edge_order=1)

    def face_G(self, u):
        """``grad u + Z(u)`` at interior faces, shape ``(nfaces, n)``."""
        g = self.grid
        L, R, ax = g.face_left, g.face_right, g.face_axis
        hn = np.array(g.h)[ax]
        G = np.zeros((L.size, g.n))
        G[np.arange(L.size), ax] = (u[R] - u[L]) / hn
        if g.n == 2:
            U = u.reshape(g.shape)
            for a in range(2):
                other = 1 - a
                dt_cells = self._tangential(U, other).ravel()
                sel = ax == a
                G[sel, other] = 0.5 * (dt_cells[L[sel]] + dt_cells[R[sel]])
        if not self.data.Z.is_zero:
            G = G + self.data.Z(0.5 * (u[L] + u[R]))
        return G

    def trace(self, u):
        """Linear extrapolation of ``u`` to boundary faces, clamped at 0."""
        g = self.grid
        return np.maximum(1.5 * u[g.bface_cell] - 0.5 * u[g.bface_inner], 0.0)

    def divergence(self, u, t):
        """``(1/vol) sum_faces area * flux`` including boundary data at ``t``."""
        g = self.grid
        G = self.face_G(u)
        K = np.asarray(eval_K(self.law, np.linalg.norm(G, axis=-1)))
        Fn = K * G[np.arange(G.shape[0]), g.face_axis] * g.face_area
        out = np.zeros(g.size)
        np.add.at(out, g.face_left, Fn)
        np.add.at(out, g.face_right, -Fn)
        Bv = np.asarray(self.data.B(g.bface_x, t, self.trace(u)), dtype=float)
        np.add.at(out, g.bface_cell, np.broadcast_to(Bv, g.bface_area.shape) * g.bface_area)
        return out / g.cell_volume

    def spatial(self, u, t):
        """Right-hand side ``div(...) + f``."""
        f = np.asarray(self.data.f(self.grid.centers, t, u), dtype=float)
        return self.divergence(u, t) + np.broadcast_to(f, u.shape)

    def _pow(self, u):
        return np.power(np.maximum(u, self.eps_u), self.lam)

    def residual(self, u, u_old, t_new, dt):
        return (self._pow(u) - self._pow(u_old)) / dt - self.spatial(u, t_new)

    # Jacobian ------------------------------------------------------------
    def _coloring(self):
        g = self.grid
        ijk = np.array(np.unravel_index(np.arange(g.size), g.shape)).T
        if g.n == 1:
            color = ijk[:, 0] % 3
        else:
            color = (ijk[:, 0] % 3) * 3 + ijk[:, 1] % 3
        # stencil: all cells within distance 1 along every axis
        rows, cols = [], []
        offsets = [(d,) for d in (-1, 0, 1)] if g.n == 1 else \
            [(d0, d1) for d0 in (-1, 0, 1) for d1 in (-1, 0, 1)]
        for off in offsets:
            nb = ijk + np.array(off)
            ok = np.all((nb >= 0) & (nb < np.array(g.shape)), axis=1)
            rows.append(np.flatnonzero(ok))
            cols.append(np.ravel_multi_index(tuple(nb[ok].T), g.shape))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        return color, rows, cols

    def jacobian(self, u, t_new, dt, base=None):
        """Sparse Jacobian of :meth:`residual` with respect to ``u``."""
        color, rows, cols = self._colors
        base = self.spatial(u, t_new) if base is None else base
        hstep = np.sqrt(np.finfo(float).eps) * np.maximum(np.abs(u), 1.0)
        vals = np.zeros(rows.size)
        for c in range(int(color.max()) + 1):
            pert = color == c
            up = u.copy()
            up[pert] += hstep[pert]
            d = (self.spatial(up, t_new) - base)
            sel = pert[cols]
            vals[sel] = -d[rows[sel]] / hstep[cols[sel]]
        J = sparse.csr_matrix((vals, (rows, cols)), shape=(u.size, u.size))
        # floor keeps the diagonal finite when eps_u = 0 and lam < 1
        time = self.lam * np.power(np.maximum(u, max(self.eps_u, 1e-300)), self.lam - 1.0) / dt
        return J + sparse.diags(time)


# ---------------------------------------------------------------------------
# time stepping

@dataclass
class StepInfo:
    iterations: int
    residual: float
    dt: float
    halvings: int


class Solver:
    """Backward-Euler driver around a :class:`Discretization`."""

    def __init__(self, grid: Grid, law: ForchheimerLaw, lam: float, data: ProblemData,
                 config: SolverConfig):
        if config.drift_sign is not None:
            data = dataclasses.replace(data, Z=dataclasses.replace(data.Z, sign=config.drift_sign))
        self.grid, self.law, self.lam, self.data, self.config = grid, law, lam, data, config
        self.disc = Discretization(grid, law, lam, data, config.eps_u)
        self.last_info: Optional[StepInfo] = None

    def _newton(self, u_old, t_new, dt):
        cfg = self.config
        u = np.maximum(u_old, cfg.eps_u)
        res = self.disc.residual(u, u_old, t_new, dt)
        rnorm = np.abs(res).max()
        for it in range(1, cfg.max_iter + 1):
            # tolerance on dt * residual, i.e. on the change of u^lam
            if rnorm * dt < cfg.tol * (1 + np.abs(u).max()):
                return u, it - 1, rnorm
            spat = self.disc.spatial(u, t_new)
            J = self.disc.jacobian(u, t_new, dt, base=spat)
            du = spsolve(J.tocsc(), -res)
            if not np.all(np.isfinite(du)):
                break
            step = 1.0
            for _ in range(12):
                trial = np.maximum(u + step * du, cfg.eps_u)
                r_trial = self.disc.residual(trial, u_old, t_new, dt)
                tn = np.abs(r_trial).max()
                if np.isfinite(tn) and tn < rnorm * (1 - 1e-4 * step):
                    break
                step *= 0.5
            else:
                # accept the full step anyway when nothing smaller helps
                trial = np.maximum(u + du, cfg.eps_u)
                r_trial = self.disc.residual(trial, u_old, t_new, dt)
                tn = np.abs(r_trial).max()
            u, res, rnorm = trial, r_trial, tn
        if rnorm * dt < cfg.tol * (1 + np.abs(u).max()):
            return u, cfg.max_iter, rnorm
        return None, cfg.max_iter, rnorm

    def step(self, state: Field, dt: Optional[float] = None) -> Field:
        """Advance ``state`` by ``dt`` (halving on failure)."""
        dt = self.config.dt if dt is None else dt
        sub = 1
        for halving in range(self.config.max_halvings + 1):
            u = state.values
            t = state.t
            h = dt / sub
            ok = True
            iters = 0
            rmax = 0.0
            for _ in range(sub):
                new, it, rn = self._newton(u, t + h, h)
                if new is None:
                    ok = False
                    break
                u, t = new, t + h
                iters += it
                rmax = max(rmax, rn)
            if ok:
                self.last_info = StepInfo(iters, rmax, h, halving)
                return Field(u, state.t + dt)
            log.debug("newton failed at t=%g, halving dt", state.t)
            sub *= 2
        raise SolverError("nonlinear solve did not converge", state.t)


@dataclass
class Trajectory:
    grid: Grid
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    monitors: dict = field(default_factory=dict)
    monitor_times: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def array(self) -> np.ndarray:
        return np.array(self.fields)


Monitor = Callable[[Grid, np.ndarray, float], float]


def run(solver: Solver, u0, T: float, monitors: Optional[dict] = None,
        stride: int = 1) -> Trajectory:
    """Advance from ``u0`` to ``T`` with fixed steps ``config.dt`` (the last
    one shortened); record fields every ``stride`` steps and the final one,
    and evaluate every monitor ``m(grid, u, t)`` after every step."""
    monitors = monitors or {}
    state = Field(np.array(u0, dtype=float).ravel(), 0.0)
    traj = Trajectory(grid=solver.grid, monitors={k: [] for k in monitors})

    def record_monitors(st):
        traj.monitor_times.append(st.t)
        for k, m in monitors.items():
            traj.monitors[k].append(float(m(solver.grid, st.values, st.t)))

    traj.times.append(0.0)
    traj.fields.append(state.values.copy())
    record_monitors(state)
    if T <= 0:
        return traj
    nsteps = max(int(math.ceil(T / solver.config.dt - 1e-9)), 1)
    for k in range(1, nsteps + 1):
        t_target = min(k * solver.config.dt, T) if k < nsteps else T
        try:
            state = solver.step(state, t_target - state.t)
        except SolverError as exc:
            raise SolverError("step failed", exc.t) from exc
        state.t = t_target
        traj.steps.append(solver.last_info)
        record_monitors(state)
        if k % stride == 0 or k == nsteps:
            traj.times.append(state.t)
            traj.fields.append(state.values.copy())
    return traj


@dataclass
class ProblemSpec:
    """Everything needed for a run: grid, law, time exponent, data, ``u0``, ``T``.

    ``u0`` is either an array of cell values or a callable of the cell
    centres (shape ``(m, n)``).
    """

    grid: Grid
    law: ForchheimerLaw
    lam: float
    data: ProblemData
    u0: object
    T: float
    config: SolverConfig
    exact: Optional[Callable] = None  # exact solution u(x, t), when known

    def initial_values(self) -> np.ndarray:
        u0 = self.u0(self.grid.centers) if callable(self.u0) else self.u0
        u0 = np.broadcast_to(np.asarray(u0, dtype=float), (self.grid.size,)).copy()
        if np.any(u0 < 0):
            raise ValueError("initial data must be non-negative")
        return u0


def simulate(spec: ProblemSpec, monitors: Optional[dict] = None, stride: int = 1):
    solver = Solver(spec.grid, spec.law, spec.lam, spec.data, spec.config)
    return run(solver, spec.initial_values(), spec.T, monitors, stride)


# ---------------------------------------------------------------------------
# output

def _header(meta: dict) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in meta.items())


def write_trajectory(path, traj: Trajectory, meta: Optional[dict] = None) -> None:
    """CSV with one row per sample: ``t`` then cell values (row-major)."""
    meta = dict(meta or {})
    ncell = traj.grid.size
    with open(path, "w", newline="") as fh:
        fh.write(_header(meta))
        fh.write(",".join(["t"] + [f"u{k}" for k in range(ncell)]) + "\n")
        for t, u in zip(traj.times, traj.fields):
            fh.write(",".join([repr(float(t))] + [repr(float(v)) for v in u]) + "\n")


def write_grid(path, grid: Grid, meta: Optional[dict] = None) -> None:
    """Binary sidecar with grid metadata (``.npz``)."""
    np.savez(path, shape=np.array(grid.shape), extents=np.array(grid.extents),
             h=np.array(grid.h), centers=grid.centers,
             meta=np.array([f"{k}={v}" for k, v in (meta or {}).items()]))


def write_monitors(path, traj: Trajectory, meta: Optional[dict] = None) -> None:
    """CSV in long format ``t, name, value``."""
    with open(path, "w", newline="") as fh:
        fh.write(_header(dict(meta or {})))
        fh.write("t,name,value\n")
        for k, t in enumerate(traj.monitor_times):
            for name, vals in traj.monitors.items():
                fh.write(f"{t!r},{name},{vals[k]!r}\n")


def read_trajectory(path):
    """Inverse of :func:`write_trajectory`: ``(meta, times, fields)``."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(": ")
                meta[k] = v
            elif line.startswith("t,"):
                continue
            elif line.strip():
                rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows)
    return meta, arr[:, 0], arr[:, 1:]
