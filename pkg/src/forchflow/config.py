"""Scenario configuration: schema, presets, YAML round trip and the mapping
from a configuration to solver and estimate objects.

A configuration is a nested mapping; every key has a documented default
(see ``DEFAULTS``) so the canonical form is the fully expanded mapping.
Errors name the offending key by its dotted path, e.g. ``solver.dt``.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from typing import Any, Optional

import numpy as np
import yaml

from .constitutive import ConstitutiveError, ForchheimerLaw
from .fluid import (Drift, FluidModel, FluidModelError, ProblemData, constant_data,
                    derive_parameters, volumetric_flux_data, zero_data)
from .solver import Grid, ProblemSpec, SolverConfig

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` is the dotted path at fault."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


# (type, nullable, choices)
_F, _I, _S, _B = "float", "int", "str", "bool"
_LF, _LI, _LS, _LLF = "list[float]", "list[int]", "list[str]", "list[list[float]]"

SCHEMA: dict[str, tuple] = {
    "name": (_S, False, None),
    "preset": (_S, True, None),
    "law.pairs": (_LLF, False, None),
    "fluid.kind": (_S, False, ("isentropic", "ideal", "slightly_compressible")),
    "fluid.gamma": (_F, True, None),
    "fluid.cbar": (_F, False, None),
    "fluid.kappa": (_F, False, None),
    "fluid.gravity": (_LF, False, None),
    "fluid.drift_sign": (_F, False, (-1.0, 1.0)),
    "fluid.ell_Z": (_F, True, None),
    "domain.dimension": (_I, False, (1, 2, 3)),
    "domain.cells": (_LI, True, None),
    "domain.extents": (_LF, True, None),
    "initial.kind": (_S, False, ("cosine", "constant", "tabulated", "zero")),
    "initial.base": (_F, False, None),
    "initial.amplitude": (_F, False, None),
    "initial.mode": (_LI, False, None),
    "initial.file": (_S, True, None),
    "boundary.kind": (_S, False, ("zero", "constant", "volumetric", "tabulated")),
    "boundary.value": (_F, False, None),
    "boundary.psi": (_F, False, None),
    "boundary.ell_B": (_F, False, None),
    "boundary.file": (_S, True, None),
    "source.kind": (_S, False, ("zero", "constant", "tabulated")),
    "source.value": (_F, False, None),
    "source.ell_f": (_F, False, None),
    "source.file": (_S, True, None),
    "manufactured.enabled": (_B, False, None),
    "manufactured.form": (_S, False, ("w-linear", "exp-decay")),
    "manufactured.base": (_F, False, None),
    "manufactured.amplitude": (_F, False, None),
    "manufactured.rate": (_F, False, None),
    "manufactured.study": (_S, False, ("space", "time")),
    "assumptions": (_LS, False, None),
    "solver.T": (_F, False, None),
    "solver.dt": (_F, False, None),
    "solver.tol": (_F, False, None),
    "solver.max_iter": (_I, False, None),
    "solver.eps_u": (_F, False, None),
    "solver.max_halvings": (_I, False, None),
    "solver.stride": (_I, False, None),
    "estimate.alphas": (_LF, False, None),
    "estimate.p": (_LF, True, None),
    "estimate.alpha0": (_F, True, None),
    "estimate.sigma": (_F, False, None),
    "estimate.C0": (_F, True, None),
    "estimate.C": (_F, False, None),
    "estimate.c7": (_F, False, None),
    "estimate.levels": (_I, False, None),
    "estimate.eps": (_F, True, None),
    "output.dir": (_S, False, None),
}

DEFAULTS: dict[str, Any] = {
    "name": "scenario",
    "preset": None,
    "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
    "fluid": {"kind": "slightly_compressible", "gamma": None, "cbar": 1.0, "kappa": 1.0,
              "gravity": [0.0], "drift_sign": -1.0, "ell_Z": None},
    "domain": {"dimension": 1, "cells": [64], "extents": [1.0]},
    "initial": {"kind": "cosine", "base": 2.0, "amplitude": 1.0, "mode": [1],
                "file": None},
    "boundary": {"kind": "zero", "value": 0.0, "psi": 0.0, "ell_B": 0.0, "file": None},
    "source": {"kind": "zero", "value": 0.0, "ell_f": 0.0, "file": None},
    "manufactured": {"enabled": False, "form": "w-linear", "base": 2.0,
                     "amplitude": 0.5, "rate": 0.5, "study": "space"},
    "assumptions": ["A1", "A2", "A3"],
    "solver": {"T": 0.1, "dt": 1e-3, "tol": 1e-10, "max_iter": 30, "eps_u": 1e-12,
               "max_halvings": 5, "stride": 1},
    "estimate": {"alphas": [], "p": None, "alpha0": None, "sigma": 0.5, "C0": None,
                 "C": 1.0, "c7": 1.0, "levels": 200, "eps": None},
    "output": {"dir": "out"},
}

PRESETS: dict[str, dict] = {
    "heat-oracle": {
        "law": {"pairs": [[0.0, 1.0]]},
        "fluid": {"kind": "slightly_compressible", "kappa": 1.0, "gravity": [0.0]},
        "domain": {"dimension": 1, "cells": [128], "extents": [1.0]},
        "initial": {"kind": "cosine", "base": 2.0, "amplitude": 1.0, "mode": [1]},
        "solver": {"T": 0.1, "dt": 1e-4},
    },
    "manufactured-smooth": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
        "fluid": {"kind": "isentropic", "gamma": 1.4, "cbar": 1.0, "gravity": [0.5]},
        "domain": {"dimension": 1, "cells": [16], "extents": [1.0]},
        "manufactured": {"enabled": True, "form": "w-linear", "study": "space"},
        "assumptions": ["A1"],
        "solver": {"T": 0.5, "dt": 0.05},
    },
    "gravity-column": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
        "fluid": {"kind": "isentropic", "gamma": 1.4, "cbar": 1.0, "gravity": [-1.0]},
        "domain": {"dimension": 1, "cells": [64], "extents": [1.0]},
        "initial": {"kind": "constant", "base": 1.0},
        "solver": {"T": 0.5, "dt": 1e-2},
    },
    "robin-flux": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
        "fluid": {"kind": "isentropic", "gamma": 1.4, "cbar": 1.0, "gravity": [0.0, 0.0]},
        "domain": {"dimension": 2, "cells": [16, 16], "extents": [1.0, 1.0]},
        "initial": {"kind": "cosine", "base": 1.0, "amplitude": 0.3, "mode": [1, 1]},
        "boundary": {"kind": "volumetric", "psi": -0.2},
        "solver": {"T": 0.2, "dt": 1e-2},
    },
    "forchheimer-decay": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
        "fluid": {"kind": "slightly_compressible", "kappa": 1.0, "gravity": [0.0],
                  "ell_Z": 1.05},
        "domain": {"dimension": 1, "cells": [32], "extents": [1.0]},
        "initial": {"kind": "cosine", "base": 1.0, "amplitude": 0.5, "mode": [1]},
        "solver": {"T": 0.2, "dt": 2e-3},
        "estimate": {"alphas": [12.0], "p": [1.1, 1.1, 1.3, 1.3], "alpha0": 12.0,
                     "sigma": 0.5},
    },
    "forced-decay": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
        "fluid": {"kind": "slightly_compressible", "kappa": 1.0, "gravity": [0.0],
                  "ell_Z": 1.05},
        "domain": {"dimension": 1, "cells": [32], "extents": [1.0]},
        "initial": {"kind": "cosine", "base": 1.0, "amplitude": 0.5, "mode": [1]},
        "source": {"kind": "constant", "value": 1.0},
        "solver": {"T": 0.2, "dt": 2e-3},
        "estimate": {"alphas": [12.0], "p": [1.1, 1.1, 1.3, 1.3], "alpha0": 12.0,
                     "sigma": 0.5},
    },
    "gas-decay": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]]},
        "fluid": {"kind": "isentropic", "gamma": 1.4, "cbar": 1.0, "gravity": [0.0]},
        "domain": {"dimension": 1, "cells": [32], "extents": [1.0]},
        "initial": {"kind": "cosine", "base": 1.0, "amplitude": 0.5, "mode": [1]},
        "solver": {"T": 0.2, "dt": 2e-3},
        "estimate": {"alphas": [6.0], "p": [1.1, 1.1, 1.3, 1.3], "alpha0": 18.0,
                     "sigma": 0.5},
    },
    "gas-three-term-3d": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]]},
        "fluid": {"kind": "isentropic", "gamma": 1.4, "cbar": 1.0,
                  "gravity": [0.0, 0.0, 1.0]},
        "domain": {"dimension": 3, "cells": None, "extents": None},
        "boundary": {"ell_B": 0.0},
        "estimate": {"alphas": [12.0], "p": [1.04, 1.04, 1.1, 1.1], "alpha0": 70.0},
    },
    "zero": {
        "law": {"pairs": [[0.0, 1.0], [1.0, 1.0]]},
        "fluid": {"kind": "slightly_compressible", "kappa": 1.0, "gravity": [0.0],
                  "ell_Z": 1.05},
        "domain": {"dimension": 1, "cells": [16], "extents": [1.0]},
        "initial": {"kind": "zero"},
        "solver": {"T": 0.1, "dt": 1e-2, "eps_u": 0.0},
        "estimate": {"alphas": [12.0], "p": [1.1, 1.1, 1.3, 1.3], "alpha0": 12.0},
    },
}

# scenarios on which the estimate constants are calibrated
ORACLE_SUITE = ("forchheimer-decay", "forced-decay", "gas-decay", "zero")


# ---------------------------------------------------------------------------
# schema handling

def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        key = f"{path}{k}"
        if k not in base:
            raise ConfigError(key, "unknown key")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(key, "expected a mapping")
            out[k] = _merge(base[k], v, key + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _coerce(key: str, value, typ: str, nullable: bool, choices):
    if value is None:
        if nullable:
            return None
        raise ConfigError(key, "must not be null")
    try:
        if typ == _F:
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
        elif typ == _I:
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            out = int(value)
        elif typ == _S:
            if not isinstance(value, str):
                raise TypeError
            out = value
        elif typ == _B:
            if not isinstance(value, bool):
                raise TypeError
            out = value
        elif typ == _LF:
            out = [_coerce(f"{key}[{i}]", v, _F, False, None) for i, v in enumerate(value)]
        elif typ == _LI:
            out = [_coerce(f"{key}[{i}]", v, _I, False, None) for i, v in enumerate(value)]
        elif typ == _LS:
            out = [_coerce(f"{key}[{i}]", v, _S, False, None) for i, v in enumerate(value)]
        elif typ == _LLF:
            out = [_coerce(f"{key}[{i}]", v, _LF, False, None) for i, v in enumerate(value)]
        else:  # pragma: no cover
            raise AssertionError(typ)
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {typ}, got {value!r}") from None
    if choices is not None and out not in choices:
        raise ConfigError(key, f"must be one of {list(choices)}, got {out!r}")
    return out


def _get(d, dotted):
    for part in dotted.split("."):
        d = d[part]
    return d


def _set(d, dotted, value):
    parts = dotted.split(".")
    for part in parts[:-1]:
        d = d[part]
    d[parts[-1]] = value


def _check_semantics(cfg: dict) -> None:
    n = cfg["domain"]["dimension"]
    cells, ext = cfg["domain"]["cells"], cfg["domain"]["extents"]
    if (cells is None) != (ext is None):
        raise ConfigError("domain.cells", "cells and extents must both be set or null")
    if cells is not None:
        if len(cells) != n or len(ext) != n:
            raise ConfigError("domain.cells", f"need {n} entries for dimension {n}")
        if n == 3:
            raise ConfigError("domain.dimension", "the solver supports 1D and 2D grids")
        if min(cells) < 2:
            raise ConfigError("domain.cells", "need at least 2 cells per axis")
        if min(ext) <= 0:
            raise ConfigError("domain.extents", "must be positive")
    if len(cfg["fluid"]["gravity"]) != n:
        raise ConfigError("fluid.gravity", f"need {n} components")
    if not cfg["law"]["pairs"] or any(len(p) != 2 for p in cfg["law"]["pairs"]):
        raise ConfigError("law.pairs", "need a non-empty list of [exponent, coefficient]")
    for lv in cfg["assumptions"]:
        if lv not in ("A1", "A2", "A3"):
            raise ConfigError("assumptions", f"unknown assumption {lv!r}")
    s = cfg["solver"]
    for k in ("dt", "tol"):
        if not s[k] > 0:
            raise ConfigError(f"solver.{k}", "must be positive")
    if s["T"] < 0:
        raise ConfigError("solver.T", "must be >= 0")
    if s["eps_u"] < 0:
        raise ConfigError("solver.eps_u", "must be >= 0")
    if s["stride"] < 1:
        raise ConfigError("solver.stride", "must be >= 1")
    sig = cfg["estimate"]["sigma"]
    if not 0 < sig < 1:
        raise ConfigError("estimate.sigma", "must lie in (0, 1)")
    p = cfg["estimate"]["p"]
    if p is not None and len(p) != 4:
        raise ConfigError("estimate.p", "need four exponents p1..p4")
    for name in ("initial", "boundary", "source"):
        if cfg[name]["kind"] == "tabulated" and not cfg[name]["file"]:
            raise ConfigError(f"{name}.file", "required for tabulated data")
    if cfg["fluid"]["kind"] == "isentropic" and cfg["fluid"]["gamma"] is None:
        raise ConfigError("fluid.gamma", "required for isentropic fluids")


def parse_config(raw: Optional[dict]) -> dict:
    """Validate ``raw`` (possibly naming a ``preset``) into canonical form."""
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a mapping")
    base = copy.deepcopy(DEFAULTS)
    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        base = _merge(base, PRESETS[preset])
        base["name"] = preset
    cfg = _merge(base, raw)
    for key, (typ, nullable, choices) in SCHEMA.items():
        _set(cfg, key, _coerce(key, _get(cfg, key), typ, nullable, choices))
    _check_semantics(cfg)
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return parse_config(raw)


def dump_config(cfg: dict) -> str:
    """Canonical YAML text; ``parse_config(yaml.safe_load(dump_config(c))) == c``."""
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=None)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata(cfg: dict, **extra) -> dict:
    meta = {"config_hash": config_hash(cfg), "format_version": FORMAT_VERSION,
            "scenario": cfg["name"]}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# building objects

def build_law(cfg: dict) -> ForchheimerLaw:
    try:
        return ForchheimerLaw.from_pairs(cfg["law"]["pairs"])
    except ConstitutiveError as exc:
        raise ConfigError("law.pairs", str(exc)) from None


def build_model(cfg: dict) -> FluidModel:
    f = cfg["fluid"]
    try:
        return derive_parameters(f["kind"], gamma=f["gamma"], cbar=f["cbar"],
                                 kappa=f["kappa"], gravity=tuple(f["gravity"]))
    except FluidModelError as exc:
        raise ConfigError("fluid", str(exc)) from None


def build_drift(cfg: dict, model: FluidModel) -> Drift:
    f = cfg["fluid"]
    zero = not any(f["gravity"])
    ell = model.ell
    if f["ell_Z"] is not None:
        if not zero:
            raise ConfigError("fluid.ell_Z", "may only be overridden when gravity is zero")
        ell = f["ell_Z"]
    return Drift(model.c, ell, tuple(f["gravity"]), f["drift_sign"])


def build_grid(cfg: dict, level: int = 0) -> Grid:
    d = cfg["domain"]
    if d["cells"] is None:
        raise ConfigError("domain.cells", "a grid is required for this command")
    return Grid(tuple(c * 2 ** level for c in d["cells"]), tuple(d["extents"]))


def _read_table(key, path, size):
    try:
        vals = np.loadtxt(path, delimiter=",", comments="#", ndmin=1).ravel()
    except (OSError, ValueError) as exc:
        raise ConfigError(key, f"cannot read table: {exc}") from None
    if vals.size != size:
        raise ConfigError(key, f"table has {vals.size} values, need {size}")
    return vals


def _cosine(grid: Grid, cfg_init):
    x = grid.centers
    modes = cfg_init["mode"]
    if len(modes) != grid.n:
        raise ConfigError("initial.mode", f"need {grid.n} entries")
    prod = np.ones(len(x))
    for k, (m, L) in enumerate(zip(modes, grid.extents)):
        prod = prod * np.cos(m * np.pi * x[:, k] / L)
    return cfg_init["base"] + cfg_init["amplitude"] * prod


def build_initial(cfg: dict, grid: Grid) -> np.ndarray:
    ini = cfg["initial"]
    kind = ini["kind"]
    if kind == "zero":
        u0 = np.zeros(grid.size)
    elif kind == "constant":
        u0 = np.full(grid.size, ini["base"])
    elif kind == "cosine":
        u0 = _cosine(grid, ini)
    else:
        u0 = _read_table("initial.file", ini["file"], grid.size)
    if np.any(u0 < 0):
        raise ConfigError("initial", "initial data must be non-negative")
    return u0


def build_data(cfg: dict, model: FluidModel, grid: Optional[Grid] = None) -> ProblemData:
    Z = build_drift(cfg, model)
    b, s = cfg["boundary"], cfg["source"]
    level = tuple(cfg["assumptions"])
    if b["kind"] == "volumetric":
        psi_val = b["psi"]
        psi = lambda x, t: np.full(np.shape(x)[0], psi_val)
        data = volumetric_flux_data(Z, psi, model.lam, f0=s["value"] if s["kind"] == "constant" else 0.0,
                                    level=level)
    elif b["kind"] in ("zero", "constant"):
        B0 = b["value"] if b["kind"] == "constant" else 0.0
        f0 = s["value"] if s["kind"] == "constant" else 0.0
        data = constant_data(Z, B0, f0, level=level, ell_B=b["ell_B"], ell_f=s["ell_f"])
        if B0 == 0 and f0 == 0:
            data = zero_data(Z, ell_B=b["ell_B"], ell_f=s["ell_f"], level=level)
    else:
        if grid is None:
            raise ConfigError("boundary.file", "tabulated boundary data needs a grid")
        vals = _read_table("boundary.file", b["file"], grid.bface_cell.size)
        f0 = s["value"] if s["kind"] == "constant" else 0.0
        data = constant_data(Z, 0.0, f0, level=level, ell_B=b["ell_B"], ell_f=s["ell_f"])
        data.B = lambda x, t, u=None: vals.copy()
        data.phi1 = lambda x, t: np.abs(vals)
    if s["kind"] == "tabulated":
        if grid is None:
            raise ConfigError("source.file", "tabulated source needs a grid")
        fv = _read_table("source.file", s["file"], grid.size)
        data.f = lambda x, t, u=None: fv.copy()
        data.f1 = lambda x, t: np.abs(fv)
    return data


def manufactured_solution(cfg: dict, lam: float):
    m = cfg["manufactured"]
    base, amp, rate = m["base"], m["amplitude"], m["rate"]
    ext = cfg["domain"]["extents"]

    def shape(x):
        out = np.ones(np.shape(x)[0])
        for k, L in enumerate(ext):
            out = out * np.cos(np.pi * x[..., k] / L)
        return out

    if m["form"] == "w-linear":
        # u^lam linear in t: backward Euler has no time error for this solution
        return lambda x, t: (base + amp * shape(x) + rate * t) ** (1.0 / lam)
    return lambda x, t: base + amp * shape(x) * np.exp(-rate * t)


def build_solver_config(cfg: dict, dt: Optional[float] = None) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(dt=s["dt"] if dt is None else dt, tol=s["tol"],
                        max_iter=s["max_iter"], eps_u=s["eps_u"],
                        max_halvings=s["max_halvings"])


def build_spec(cfg: dict, level: int = 0) -> ProblemSpec:
    """Problem at refinement ``level`` (cells times ``2^level``; for a
    temporal manufactured study ``dt / 2^level`` instead)."""
    from .verification import manufactured_case

    law, model = build_law(cfg), build_model(cfg)
    m = cfg["manufactured"]
    if m["enabled"]:
        time_study = m["study"] == "time"
        grid = build_grid(cfg, 0 if time_study else level)
        dt = cfg["solver"]["dt"] / (2 ** level if time_study else 1)
        Z = build_drift(cfg, model)
        return manufactured_case(manufactured_solution(cfg, model.lam), grid, law, model.lam,
                                 Z, cfg["solver"]["T"], build_solver_config(cfg, dt))
    grid = build_grid(cfg, level)
    data = build_data(cfg, model, grid)
    exact = heat_exact(cfg, law, model)
    return ProblemSpec(grid=grid, law=law, lam=model.lam, data=data,
                       u0=build_initial(cfg, grid), T=cfg["solver"]["T"],
                       config=build_solver_config(cfg), exact=exact)


def heat_exact(cfg: dict, law: ForchheimerLaw, model: FluidModel):
    """Exact solution of the Darcy, ``lam = 1``, no-drift, no-data cosine
    problem, else ``None``."""
    if not (law.is_darcy and model.lam == 1.0 and not any(cfg["fluid"]["gravity"])
            and cfg["boundary"]["kind"] == "zero" and cfg["source"]["kind"] == "zero"
            and cfg["initial"]["kind"] == "cosine"):
        return None
    ini = cfg["initial"]
    ext = cfg["domain"]["extents"]
    rate = sum((m * np.pi / L) ** 2 for m, L in zip(ini["mode"], ext)) / law.a0

    def exact(x, t):
        prod = np.ones(np.shape(x)[0])
        for k, (m, L) in enumerate(zip(ini["mode"], ext)):
            prod = prod * np.cos(m * np.pi * x[..., k] / L)
        return ini["base"] + ini["amplitude"] * prod * np.exp(-rate * t)
    return exact
