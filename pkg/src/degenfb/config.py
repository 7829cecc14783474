"""Run configuration: schema checks with field paths, presets and object builders.

A config is a JSON object; every section is optional except the ones the
chosen subcommand needs.  Field data (``a``, ``Q``, ``f``, ``g``) is either a
number or a preset object such as ``{"preset": "linear_ramp", "start": 1,
"end": 0, "axis": 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField

__all__ = [
    "SUBCOMMANDS",
    "PRESETS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "validate_config",
    "build_field",
    "build_problem",
    "build_solve_config",
    "build_geometry_config",
]

SUBCOMMANDS = ("solve", "sweep", "barrier", "oned", "geometry")
OPERATORS = ("laplacian", "pucci_plus", "pucci_minus", "hessian_fm")
PRESETS = ("constant", "linear_ramp", "strip", "gaussian", "checkerboard")


class ConfigError(ValueError):
    """Schema or invariant violations, collected with their field paths."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _num(errs, path, v, *, positive=False, nonneg=False, integer=False, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        errs.append(f"{path}: expected a finite number, got {v!r}")
        return False
    if integer and int(v) != v:
        errs.append(f"{path}: expected an integer, got {v!r}")
        return False
    if positive and not v > 0:
        errs.append(f"{path}: must be positive, got {v!r}")
        return False
    if nonneg and not v >= 0:
        errs.append(f"{path}: must be non-negative, got {v!r}")
        return False
    if lo is not None and v < lo:
        errs.append(f"{path}: must be >= {lo}, got {v!r}")
        return False
    if hi is not None and v > hi:
        errs.append(f"{path}: must be <= {hi}, got {v!r}")
        return False
    return True


def _keys(errs, path, d, allowed):
    if not isinstance(d, dict):
        errs.append(f"{path}: expected an object")
        return False
    for k in d:
        if k not in allowed:
            errs.append(f"{path}.{k}: unknown field")
    return True


_PRESET_KEYS = {
    "constant": {"value"},
    "linear_ramp": {"start", "end", "axis"},
    "strip": {"left", "right"},
    "gaussian": {"amplitude", "center", "width", "offset"},
    "checkerboard": {"low", "high", "cells"},
}


def _check_field(errs, path, spec, dim):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        _num(errs, path, spec)
        return
    if not isinstance(spec, dict) or "preset" not in spec:
        errs.append(f"{path}: expected a number or a preset object")
        return
    name = spec["preset"]
    if name not in PRESETS:
        errs.append(f"{path}.preset: unknown preset {name!r} (choose from {', '.join(PRESETS)})")
        return
    _keys(errs, path, spec, _PRESET_KEYS[name] | {"preset"})
    for k in _PRESET_KEYS[name]:
        if k not in spec:
            if name == "gaussian" and k in ("offset",):
                continue
            if name == "linear_ramp" and k == "axis":
                continue
            errs.append(f"{path}.{k}: required by preset {name!r}")
            continue
        v = spec[k]
        if k == "center":
            if not (isinstance(v, list) and len(v) == dim):
                errs.append(f"{path}.center: expected {dim} coordinates")
            else:
                for i, c in enumerate(v):
                    _num(errs, f"{path}.center[{i}]", c)
        elif k == "axis":
            if _num(errs, f"{path}.axis", v, integer=True) and not 0 <= v < dim:
                errs.append(f"{path}.axis: out of range for dimension {dim}")
        elif k == "cells":
            _num(errs, f"{path}.cells", v, integer=True, positive=True)
        elif k == "width":
            _num(errs, f"{path}.width", v, positive=True)
        else:
            _num(errs, f"{path}.{k}", v)


def build_field(grid: Grid, spec) -> ScalarField | float:
    """Number -> constant; preset object -> sampled field."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec)
    name = spec["preset"]
    lo, hi = np.array(grid.lo), np.array(grid.hi)
    xs = grid.coords()
    if name == "constant":
        return ScalarField.constant(grid, float(spec["value"]))
    if name in ("linear_ramp", "strip"):
        k = int(spec.get("axis", 0))
        a = float(spec["start"] if name == "linear_ramp" else spec["left"])
        b = float(spec["end"] if name == "linear_ramp" else spec["right"])
        s = (xs[k] - lo[k]) / (hi[k] - lo[k])
        return ScalarField(grid, a + (b - a) * s)
    if name == "gaussian":
        c = np.asarray(spec["center"], dtype=float)
        r2 = sum((x - c[k]) ** 2 for k, x in enumerate(xs))
        vals = float(spec.get("offset", 0.0)) + float(spec["amplitude"]) * np.exp(-r2 / (2 * float(spec["width"]) ** 2))
        return ScalarField(grid, vals)
    if name == "checkerboard":
        cells = int(spec["cells"])
        idx = sum(np.minimum(np.floor((x - lo[k]) / (hi[k] - lo[k]) * cells), cells - 1) for k, x in enumerate(xs))
        vals = np.where(idx.astype(int) % 2 == 0, float(spec["low"]), float(spec["high"]))
        return ScalarField(grid, vals)
    raise ValueError(f"unknown preset {name!r}")


def _field_min(grid, spec, mask=None):
    v = build_field(grid, spec)
    if isinstance(v, float):
        return v
    return float(v.values[mask].min() if mask is not None else v.values.min())


@dataclass
class RunConfig:
    subcommand: str
    raw: dict
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)


_TOP = {"subcommand", "seed", "grid", "reflect_axes", "degeneracy", "operator", "reaction", "g", "solve",
        "sweep", "geometry", "barrier", "oned"}


def _check_grid(errs, cfg):
    g = cfg.get("grid")
    if g is None:
        errs.append("grid: required")
        return None
    if not _keys(errs, "grid", g, {"lo", "hi", "n"}):
        return None
    ok = True
    for k in ("lo", "hi", "n"):
        if not isinstance(g.get(k), list) or len(g[k]) not in (1, 2):
            errs.append(f"grid.{k}: expected a list of length 1 or 2")
            ok = False
    if not ok:
        return None
    if not len(g["lo"]) == len(g["hi"]) == len(g["n"]):
        errs.append("grid: lo, hi and n must have equal lengths")
        return None
    for i in range(len(g["n"])):
        ok &= _num(errs, f"grid.lo[{i}]", g["lo"][i])
        ok &= _num(errs, f"grid.hi[{i}]", g["hi"][i])
        ok &= _num(errs, f"grid.n[{i}]", g["n"][i], integer=True, lo=3)
    if not ok:
        return None
    try:
        return Grid(tuple(float(v) for v in g["lo"]), tuple(float(v) for v in g["hi"]), tuple(int(v) for v in g["n"]))
    except ValueError as e:
        errs.append(f"grid: {e}")
        return None


def _check_problem(errs, cfg, grid, need_eps=True):
    dim = grid.dim if grid is not None else 2
    d = cfg.get("degeneracy")
    if d is None:
        errs.append("degeneracy: required")
    elif _keys(errs, "degeneracy", d, {"p", "q", "a", "L1", "L2", "synthetic"}):
        okp = "p" in d and _num(errs, "degeneracy.p", d["p"], positive=True)
        okq = "q" in d and _num(errs, "degeneracy.q", d["q"], positive=True)
        for k in ("p", "q"):
            if k not in d:
                errs.append(f"degeneracy.{k}: required")
        if okp and okq and d["q"] < d["p"]:
            errs.append("degeneracy: exponents must satisfy 0 < p <= q")
        l1, l2 = d.get("L1", 1.0), d.get("L2", 1.0)
        if _num(errs, "degeneracy.L1", l1, positive=True) and _num(errs, "degeneracy.L2", l2, positive=True) and l1 > l2:
            errs.append("degeneracy: need L1 <= L2")
        if "a" in d:
            _check_field(errs, "degeneracy.a", d["a"], dim)
            if grid is not None and not any(e.startswith("degeneracy.a") for e in errs):
                if _field_min(grid, d["a"]) < 0:
                    errs.append("degeneracy.a: modulating coefficient must be non-negative")
    op = cfg.get("operator", {"kind": "laplacian"})
    if _keys(errs, "operator", op, {"kind", "lambda", "Lambda", "m"}):
        kind = op.get("kind")
        if kind not in OPERATORS:
            errs.append(f"operator.kind: expected one of {', '.join(OPERATORS)}, got {kind!r}")
        lam, Lam = op.get("lambda", 1.0), op.get("Lambda", 1.0)
        if _num(errs, "operator.lambda", lam, positive=True) and _num(errs, "operator.Lambda", Lam, positive=True):
            if lam > Lam:
                errs.append("operator: ellipticity constants need lambda <= Lambda")
        if "m" in op and _num(errs, "operator.m", op["m"], integer=True, positive=True) and op["m"] % 2 == 0:
            errs.append("operator.m: must be odd")
    r = cfg.get("reaction")
    if r is None:
        errs.append("reaction: required")
    elif _keys(errs, "reaction", r, {"eps", "Q", "f"}):
        if need_eps and "eps" not in r:
            errs.append("reaction.eps: required")
        elif "eps" in r:
            _num(errs, "reaction.eps", r["eps"], positive=True)
        for k in ("Q", "f"):
            if k in r:
                _check_field(errs, f"reaction.{k}", r[k], dim)
                if grid is not None and not any(e.startswith(f"reaction.{k}") for e in errs):
                    if _field_min(grid, r[k]) < 0:
                        errs.append(f"reaction.{k}: must be non-negative")
    if "g" not in cfg:
        errs.append("g: required")
    else:
        _check_field(errs, "g", cfg["g"], dim)
    ra = cfg.get("reflect_axes", [])
    if not isinstance(ra, list):
        errs.append("reflect_axes: expected a list")
    else:
        for i, k in enumerate(ra):
            if _num(errs, f"reflect_axes[{i}]", k, integer=True) and not 0 <= k < dim:
                errs.append(f"reflect_axes[{i}]: axis out of range")
        if len(ra) >= dim:
            errs.append("reflect_axes: at least one axis needs Dirichlet data")
    if grid is not None and "g" in cfg and not any(e.startswith(("g", "reflect_axes")) for e in errs):
        mask = np.zeros(grid.shape, dtype=bool)
        for k in range(dim):
            if k in ra:
                continue
            sl = [slice(None)] * dim
            sl[k] = 0
            mask[tuple(sl)] = True
            sl[k] = -1
            mask[tuple(sl)] = True
        if _field_min(grid, cfg["g"], mask) < 0:
            errs.append("g: boundary datum must satisfy 0 <= g")


_SOLVE_KEYS = {"cfl", "tol", "max_iter", "project_nonneg", "scheme", "min_layer_nodes"}


def _check_solve(errs, cfg):
    s = cfg.get("solve", {})
    if not _keys(errs, "solve", s, _SOLVE_KEYS):
        return
    if "cfl" in s and _num(errs, "solve.cfl", s["cfl"]) and not 0 < s["cfl"] < 1:
        errs.append("solve.cfl: must lie in (0, 1)")
    if "tol" in s:
        _num(errs, "solve.tol", s["tol"], positive=True)
    if "max_iter" in s:
        _num(errs, "solve.max_iter", s["max_iter"], integer=True, positive=True)
    if "min_layer_nodes" in s:
        _num(errs, "solve.min_layer_nodes", s["min_layer_nodes"], positive=True)
    if "scheme" in s and s["scheme"] not in ("explicit", "implicit"):
        errs.append("solve.scheme: expected 'explicit' or 'implicit'")
    if "project_nonneg" in s and not isinstance(s["project_nonneg"], bool):
        errs.append("solve.project_nonneg: expected a boolean")


def _check_resolution(errs, path, eps, grid, cfg, reaction_live):
    if grid is None or not reaction_live:
        return
    k = cfg.get("solve", {}).get("min_layer_nodes", 4.0)
    if isinstance(k, (int, float)) and isinstance(eps, (int, float)) and eps < k * grid.hmin * (1 - 1e-12):
        errs.append(f"{path}: eps={eps} is below {k:g}*h={k * grid.hmin:.6g} "
                    "(layer resolvability rule: the transition layer needs that many nodes)")


_GEOM_KEYS = {"margin", "growth_threshold", "nondeg_radii", "density_rho", "n_centers", "c1", "hausdorff_rhos",
              "hausdorff_delta_nodes", "porosity_radii", "u_csv", "eps"}


def _check_geometry(errs, cfg, standalone):
    gm = cfg.get("geometry", {})
    if not _keys(errs, "geometry", gm, _GEOM_KEYS):
        return
    for k in ("margin", "n_centers"):
        if k in gm:
            _num(errs, f"geometry.{k}", gm[k], integer=True, positive=True)
    for k in ("growth_threshold", "density_rho", "eps"):
        if k in gm:
            _num(errs, f"geometry.{k}", gm[k], positive=True)
    if "c1" in gm and _num(errs, "geometry.c1", gm["c1"]) and not gm["c1"] > 1:
        errs.append("geometry.c1: must exceed 1")
    for k in ("nondeg_radii", "hausdorff_rhos", "porosity_radii", "hausdorff_delta_nodes"):
        if k in gm:
            if not isinstance(gm[k], list) or not gm[k]:
                errs.append(f"geometry.{k}: expected a non-empty list")
                continue
            for i, v in enumerate(gm[k]):
                if k == "hausdorff_delta_nodes":
                    _num(errs, f"geometry.{k}[{i}]", v, integer=True, lo=2)
                else:
                    _num(errs, f"geometry.{k}[{i}]", v, positive=True)
    if standalone:
        if "u_csv" not in gm:
            errs.append("geometry.u_csv: required by the geometry subcommand")
        elif not isinstance(gm["u_csv"], str):
            errs.append("geometry.u_csv: expected a path string")
        if "eps" not in gm:
            errs.append("geometry.eps: required by the geometry subcommand")


_BARRIER_KEYS = {"N", "lambda", "Lambda", "p", "q", "a_sup", "L1", "L2", "t0", "T0", "I_star", "L", "samples", "Q", "f",
                 "eps"}


def _check_barrier(errs, cfg):
    b = cfg.get("barrier")
    if b is None:
        errs.append("barrier: required by the barrier subcommand")
        return
    if not _keys(errs, "barrier", b, _BARRIER_KEYS):
        return
    for k in ("t0", "T0", "p", "q"):
        if k not in b:
            errs.append(f"barrier.{k}: required")
    ok = all(_num(errs, f"barrier.{k}", b[k]) for k in ("t0", "T0") if k in b)
    if ok and "t0" in b and "T0" in b and not 0 < b["t0"] < b["T0"] < 1:
        errs.append("barrier: levels need 0 < t0 < T0 < 1")
    for k in ("p", "q", "lambda", "Lambda", "L1", "L2", "I_star", "L", "eps", "Q"):
        if k in b:
            _num(errs, f"barrier.{k}", b[k], positive=True)
    if "p" in b and "q" in b and all(isinstance(b[k], (int, float)) for k in ("p", "q")) and b["q"] < b["p"]:
        errs.append("barrier: exponents must satisfy 0 < p <= q")
    if b.get("lambda", 1.0) > b.get("Lambda", 1.0):
        errs.append("barrier: need lambda <= Lambda")
    for k in ("a_sup", "f"):
        if k in b:
            _num(errs, f"barrier.{k}", b[k], nonneg=True)
    if "N" in b:
        _num(errs, "barrier.N", b["N"], integer=True, lo=1)
    if "samples" in b:
        _num(errs, "barrier.samples", b["samples"], integer=True, lo=2)
    if "I_star" not in b and "eps" not in b:
        errs.append("barrier: give I_star or the reaction data (eps, Q, f) to certify it")


def _check_oned(errs, cfg):
    o = cfg.get("oned")
    if o is None:
        errs.append("oned: required by the oned subcommand")
        return
    if not _keys(errs, "oned", o, {"p", "q", "kappa", "eps", "h", "refine", "length"}):
        return
    for k in ("p", "q", "eps"):
        if k not in o:
            errs.append(f"oned.{k}: required")
        else:
            _num(errs, f"oned.{k}", o[k], positive=True)
    if all(isinstance(o.get(k), (int, float)) for k in ("p", "q")) and o["q"] < o["p"]:
        errs.append("oned: exponents must satisfy 0 < p <= q")
    if "kappa" in o:
        _num(errs, "oned.kappa", o["kappa"], nonneg=True)
    for k in ("h", "length"):
        if k in o:
            _num(errs, f"oned.{k}", o[k], positive=True)
    if "refine" in o and not isinstance(o["refine"], bool):
        errs.append("oned.refine: expected a boolean")


def validate_config(cfg: dict) -> list[str]:
    """Every violation found, each prefixed by its field path (never fail-fast)."""
    errs: list[str] = []
    if not isinstance(cfg, dict):
        return ["<root>: expected a JSON object"]
    _keys(errs, "<root>", cfg, _TOP)
    sub = cfg.get("subcommand")
    if sub not in SUBCOMMANDS:
        errs.append(f"subcommand: expected one of {', '.join(SUBCOMMANDS)}, got {sub!r}")
    if "seed" in cfg:
        _num(errs, "seed", cfg["seed"], integer=True, nonneg=True)
    _check_solve(errs, cfg)
    if sub in ("solve", "sweep"):
        grid = _check_grid(errs, cfg)
        _check_problem(errs, cfg, grid, need_eps=(sub == "solve"))
        r = cfg.get("reaction", {}) if isinstance(cfg.get("reaction"), dict) else {}
        live = r.get("Q", 1.0) != 0
        if sub == "solve" and "eps" in r:
            _check_resolution(errs, "reaction.eps", r["eps"], grid, cfg, live)
        if sub == "sweep":
            sw = cfg.get("sweep")
            if sw is None:
                errs.append("sweep: required by the sweep subcommand")
            elif _keys(errs, "sweep", sw, {"eps", "c1"}):
                eps = sw.get("eps")
                if not isinstance(eps, list) or not eps:
                    errs.append("sweep.eps: expected a non-empty list")
                else:
                    good = [_num(errs, f"sweep.eps[{i}]", e, positive=True) for i, e in enumerate(eps)]
                    if all(good):
                        if any(b > a for a, b in zip(eps, eps[1:])):
                            errs.append("sweep.eps: must be descending")
                        for i, e in enumerate(eps):
                            _check_resolution(errs, f"sweep.eps[{i}]", e, grid, cfg, live)
                if "c1" in sw and _num(errs, "sweep.c1", sw["c1"]) and not sw["c1"] > 1:
                    errs.append("sweep.c1: must exceed 1")
        if "geometry" in cfg:
            _check_geometry(errs, cfg, standalone=False)
    elif sub == "geometry":
        _check_geometry(errs, cfg, standalone=True)
    elif sub == "barrier":
        _check_barrier(errs, cfg)
    elif sub == "oned":
        _check_oned(errs, cfg)
    return errs


def load_config(path, seed: int | None = None, subcommand: str | None = None) -> RunConfig:
    """Read and validate; raises :class:`ConfigError` with all violations."""
    from .io import read_json
    import json

    path = Path(path)
    try:
        raw = read_json(path)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError([f"<file>: cannot read {path}: {e}"]) from e
    if subcommand is not None and isinstance(raw, dict):
        raw = {**raw, "subcommand": subcommand}
    errs = validate_config(raw)
    if errs:
        raise ConfigError(errs)
    s = int(raw.get("seed", 0) if seed is None else seed)
    return RunConfig(raw["subcommand"], raw, s, path.parent)


def build_problem(raw: dict, eps: float | None = None):
    from .operators import DegeneracyParams, operator_from_dict
    from .reaction import ReactionParams
    from .solver import ProblemSpec

    g = raw["grid"]
    grid = Grid(tuple(map(float, g["lo"])), tuple(map(float, g["hi"])), tuple(map(int, g["n"])))
    d = raw["degeneracy"]
    deg = DegeneracyParams(float(d["p"]), float(d["q"]), build_field(grid, d.get("a", 0.0)),
                           float(d.get("L1", 1.0)), float(d.get("L2", 1.0)), bool(d.get("synthetic", False)))
    op = operator_from_dict(raw.get("operator", {"kind": "laplacian"}))
    r = raw["reaction"]
    e = float(eps if eps is not None else r["eps"])
    reaction = ReactionParams(e, build_field(grid, r.get("Q", 1.0)), build_field(grid, r.get("f", 0.0)))
    gfield = build_field(grid, raw["g"])
    if isinstance(gfield, float):
        gfield = ScalarField.constant(grid, gfield)
    return ProblemSpec(grid, deg, op, reaction, gfield, tuple(raw.get("reflect_axes", ())))


def build_solve_config(raw: dict):
    from .solver import SolveConfig

    return SolveConfig(**raw.get("solve", {}))


def build_geometry_config(raw: dict, seed: int = 0):
    from .geometry import GeometryConfig

    gm = {k: v for k, v in raw.get("geometry", {}).items() if k not in ("u_csv", "eps")}
    for k in ("nondeg_radii", "hausdorff_rhos", "hausdorff_delta_nodes", "porosity_radii"):
        if k in gm:
            gm[k] = tuple(gm[k])
    return GeometryConfig(seed=seed, **gm)
