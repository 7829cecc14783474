"""Geometric measurements of solutions near the transition layer.

Every quantity is a reduction over grid nodes; sampled centres come from a
seeded generator and are sorted, so reports are reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .grid import Grid, ScalarField, ball_mask, dist_to_set, gradient_field

__all__ = [
    "GeometryConfig",
    "GeometryReport",
    "GeometryError",
    "lipschitz_norm",
    "growth_ratio",
    "strong_nondegeneracy",
    "density",
    "harnack_ratio",
    "hausdorff_content",
    "porosity",
    "hausdorff_distance",
    "level_mask",
    "sample_centers",
    "measure",
    "POROSITY_DELTAS",
]

POROSITY_DELTAS = tuple(round(0.05 * k, 2) for k in range(1, 11))


class GeometryError(ValueError):
    """A measurement has no admissible nodes or hit an inconsistent state."""


def _interior(grid: Grid, margin: int) -> np.ndarray:
    if margin < 1:
        raise GeometryError("margin must be at least one node")
    m = grid.interior_mask(margin)
    if not m.any():
        raise GeometryError(f"margin {margin} leaves no interior nodes")
    return m


def lipschitz_norm(u: ScalarField, margin: int = 1) -> float:
    """Max of the centred-difference gradient norm over nodes ``margin`` deep."""
    sel = _interior(u.grid, margin)
    g = np.linalg.norm(gradient_field(u), axis=-1)
    inner = sel[(slice(1, -1),) * u.grid.dim]
    return float(g[inner].max())


def growth_ratio(u: ScalarField, eps: float, threshold: float = 10.0, margin: int = 1):
    """``min u / d_eps`` over interior nodes with ``d_eps >= threshold * eps``.

    Returns ``(ratio, node)``.
    """
    low = u.values <= eps
    if not low.any():
        raise GeometryError("the set {u <= eps} is empty")
    d = dist_to_set(u.grid, low).values
    q = (d >= threshold * eps) & _interior(u.grid, margin)
    if not q.any():
        raise GeometryError("no far-field positivity nodes")
    r = np.where(q, u.values / np.where(q, d, 1.0), np.inf)
    k = int(np.argmin(r))
    node = tuple(int(i) for i in np.unravel_index(k, u.grid.shape))
    return float(r.ravel()[k]), node


def _ball_inside(grid: Grid, rho: float) -> np.ndarray:
    """Nodes whose closed ball of radius ``rho`` stays in the box."""
    ok = np.ones(grid.shape, dtype=bool)
    for k, x in enumerate(grid.coords()):
        tol = 1e-12 * (grid.hi[k] - grid.lo[k])
        ok &= (x - rho >= grid.lo[k] - tol) & (x + rho <= grid.hi[k] + tol)
    return ok


def sample_centers(mask: np.ndarray, n: int, seed: int = 0) -> list[tuple[int, ...]]:
    """Up to ``n`` distinct nodes of ``mask``, chosen by a seeded generator and sorted."""
    flat = np.flatnonzero(mask.ravel())
    if len(flat) == 0:
        return []
    if len(flat) > n:
        flat = np.sort(np.random.default_rng(seed).choice(flat, size=n, replace=False))
    return [tuple(int(i) for i in np.unravel_index(k, mask.shape)) for k in flat]


def _centers_or_default(u, eps, rho, margin, centers, n_centers, seed):
    if centers is not None:
        return [tuple(c) for c in centers]
    cand = (u.values > eps) & _interior(u.grid, margin) & _ball_inside(u.grid, rho)
    return sample_centers(cand, n_centers, seed)


def strong_nondegeneracy(u: ScalarField, eps: float, radii=(0.1, 0.2), margin: int = 1, centers=None,
                         n_centers: int = 200, seed: int = 0):
    """Extremal ratios ``min sup_B u / rho`` and ``max sup_B u / (rho + u(x0))``.

    Centres are sampled per radius from ``{u > eps}`` with the ball inside
    the box, unless given explicitly.
    """
    lower, upper = np.inf, 0.0
    used = 0
    for rho in radii:
        cs = _centers_or_default(u, eps, rho, margin, centers, n_centers, seed)
        for c in cs:
            s = float(u.values[ball_mask(u.grid, u.grid.node_coord(c), rho)].max())
            lower = min(lower, s / rho)
            upper = max(upper, s / (rho + float(u.values[c])))
            used += 1
    if used == 0:
        raise GeometryError("no admissible centres for strong non-degeneracy")
    return float(lower), float(upper)


def density(u: ScalarField, eps: float, rho: float, centers=None, margin: int = 1, n_centers: int = 200,
            seed: int = 0) -> float:
    """``min |B_rho(x0) n {u > eps}| / |B_rho(x0)|`` by node counts."""
    cs = _centers_or_default(u, eps, rho, margin, centers, n_centers, seed)
    if not cs:
        raise GeometryError("no admissible centres for the density estimate")
    pos = u.values > eps
    best = 1.0
    for c in cs:
        b = ball_mask(u.grid, u.grid.node_coord(c), rho)
        best = min(best, float(np.count_nonzero(pos & b)) / float(np.count_nonzero(b)))
    return best


def harnack_ratio(u: ScalarField, eps: float, centers=None, margin: int = 1, n_centers: int = 200,
                  seed: int = 0) -> float:
    """Max of ``sup/inf`` of ``u`` over ``B_{d/2}(x0)`` with ``d = dist(x0, {u <= eps})``."""
    low = u.values <= eps
    if not low.any():
        raise GeometryError("the set {u <= eps} is empty")
    d = dist_to_set(u.grid, low).values
    if centers is None:
        cand = (u.values > eps) & (d >= eps) & _interior(u.grid, margin)
        inside = np.ones_like(cand)
        for k, x in enumerate(u.grid.coords()):
            tol = 1e-12 * (u.grid.hi[k] - u.grid.lo[k])
            inside &= (x - d / 2 >= u.grid.lo[k] - tol) & (x + d / 2 <= u.grid.hi[k] + tol)
        centers = sample_centers(cand & inside, n_centers, seed)
    if not centers:
        raise GeometryError("no admissible centres for the Harnack ratio")
    worst = 1.0
    for c in centers:
        c = tuple(c)
        b = ball_mask(u.grid, u.grid.node_coord(c), d[c] / 2.0)
        lo, hi = float(u.values[b].min()), float(u.values[b].max())
        if lo <= 0:
            raise GeometryError(f"ball around {c} leaked across the layer (inf u = {lo})")
        worst = max(worst, hi / lo)
    return worst


def level_mask(u: ScalarField, level: float) -> np.ndarray:
    """Nodes of ``{u > level}`` with a face neighbour outside the set."""
    s = u.values > level
    return s & ~ndimage.binary_erosion(s, border_value=1)


def hausdorff_content(grid: Grid, mask: np.ndarray, x0, rho: float, deltas) -> list[tuple[float, float]]:
    """Box-count content of ``mask`` inside ``B_rho(x0)`` for each box size.

    The tiling is anchored at ``x0 - rho``; ``content = boxes * delta^(N-1)``.
    """
    mask = np.asarray(mask, dtype=bool)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    sel = mask & ball_mask(grid, x0, rho)
    pts = grid.points()[sel.ravel()]
    out = []
    for delta in deltas:
        if delta < 2 * grid.hmin * (1 - 1e-12):
            raise GeometryError(f"box size {delta} is below 2h = {2 * grid.hmin}")
        if len(pts) == 0:
            out.append((float(delta), 0.0))
            continue
        boxes = np.floor((pts - (x0 - rho)) / delta).astype(np.int64)
        count = len(np.unique(boxes, axis=0))
        out.append((float(delta), float(count * delta ** (grid.dim - 1))))
    return out


def _footprint(grid: Grid, radius: float) -> np.ndarray:
    half = [int(np.floor(radius / h * (1 + 1e-12))) for h in grid.h]
    axes = [np.arange(-m, m + 1) * h for m, h in zip(half, grid.h)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return sum(a * a for a in mesh) <= radius * radius * (1 + 1e-12)


def porosity(grid: Grid, mask: np.ndarray, radii=(0.05, 0.1), margin: int = 0, deltas=POROSITY_DELTAS) -> float:
    """Largest ``delta`` such that every ``B_r(x)``, ``x`` in the mask, holds a mask-free ``B_{delta r}(y)``.

    ``y`` ranges over nodes with ``|y - x| <= (1 - delta) r`` and the small ball
    is mask-free when ``dist(y, mask) > delta r``.  Returns 0 if no grid value passes.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise GeometryError("porosity of an empty set")
    test = mask & (grid.interior_mask(margin) if margin > 0 else True)
    if not np.any(test):
        return 0.0
    if mask.all():
        return 0.0
    D = dist_to_set(grid, mask).values
    best = 0.0
    for delta in sorted(deltas):
        ok = True
        for r in radii:
            fp = _footprint(grid, (1.0 - delta) * r)
            M = ndimage.maximum_filter(D, footprint=fp, mode="constant", cval=-np.inf)
            # Strict inequality; ties that differ only by rounding do not count.
            if not np.all(M[test] > delta * r * (1 + 1e-9)):
                ok = False
                break
        if ok:
            best = float(delta)
    return best


def hausdorff_distance(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if not a.any() or not b.any():
        raise GeometryError("Hausdorff distance needs two non-empty sets")
    da = dist_to_set(grid, a).values
    db = dist_to_set(grid, b).values
    return float(max(db[a].max(), da[b].max()))


@dataclass(frozen=True)
class GeometryConfig:
    margin: int = 8
    growth_threshold: float = 10.0
    nondeg_radii: tuple = (0.1, 0.2)
    density_rho: float = 0.1
    n_centers: int = 200
    seed: int = 0
    c1: float = 1.5
    hausdorff_rhos: tuple = (0.1, 0.2)
    hausdorff_delta_nodes: tuple = (2, 4, 8)
    porosity_radii: tuple = (0.05, 0.1)

    def __post_init__(self):
        errs = self.check()
        if errs:
            raise ValueError("; ".join(errs))

    def check(self) -> list[str]:
        errs = []
        if self.margin < 1:
            errs.append("margin must be at least 1")
        if not self.growth_threshold > 0:
            errs.append("growth_threshold must be positive")
        if self.n_centers < 1:
            errs.append("n_centers must be at least 1")
        if not self.c1 > 1:
            errs.append("c1 must exceed 1")
        if any(d < 2 for d in self.hausdorff_delta_nodes):
            errs.append("hausdorff box sizes must be at least 2 nodes")
        for name in ("nondeg_radii", "hausdorff_rhos", "porosity_radii"):
            if any(not r > 0 for r in getattr(self, name)):
                errs.append(f"{name} must be positive")
        return errs

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class GeometryReport:
    eps: float
    lipschitz: float
    growth_min: float
    growth_node: tuple
    nondeg_min: float
    nondeg_upper_max: float
    density_min: float
    harnack_max: float
    porosity: float
    hausdorff: list = field(default_factory=list)
    hausdorff_center: tuple = ()
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["growth_node"] = list(self.growth_node)
        d["hausdorff_center"] = list(self.hausdorff_center)
        d["hausdorff"] = [list(row) for row in self.hausdorff]
        return d

    def to_json(self) -> str:
        return json.dumps({"schema_version": "1", **self.to_dict()}, sort_keys=True, indent=2)

    def scalars(self) -> dict:
        """Quantities whose ratio across eps is bounded by the theory."""
        out = {
            "lipschitz": self.lipschitz,
            "growth_min": self.growth_min,
            "nondeg_min": self.nondeg_min,
            "density_min": self.density_min,
            "harnack_max": self.harnack_max,
        }
        for rho, delta_nodes, _, content, ratio in self.hausdorff:
            out[f"hausdorff_rho{rho:g}_d{delta_nodes}"] = ratio
        return out


def measure(u: ScalarField, eps: float, cfg: GeometryConfig | None = None) -> GeometryReport:
    """All measurements at one ``eps``."""
    cfg = cfg or GeometryConfig()
    grid = u.grid
    lip = lipschitz_norm(u, cfg.margin)
    gmin, gnode = growth_ratio(u, eps, cfg.growth_threshold, cfg.margin)
    nd_lo, nd_hi = strong_nondegeneracy(u, eps, cfg.nondeg_radii, cfg.margin, n_centers=cfg.n_centers,
                                        seed=cfg.seed)
    dens = density(u, eps, cfg.density_rho, margin=cfg.margin, n_centers=cfg.n_centers, seed=cfg.seed)
    harn = harnack_ratio(u, eps, margin=cfg.margin, n_centers=cfg.n_centers, seed=cfg.seed)
    lm = level_mask(u, cfg.c1 * eps)
    if not lm.any():
        raise GeometryError(f"level set {{u > {cfg.c1} eps}} has no boundary nodes")
    por = porosity(grid, lm, cfg.porosity_radii, margin=cfg.margin)
    # Layer node closest to the middle of the box anchors the content balls.
    mid = 0.5 * (np.array(grid.lo) + np.array(grid.hi))
    pts = grid.points()
    cand = np.flatnonzero(lm.ravel())
    k = cand[int(np.argmin(np.sum((pts[cand] - mid) ** 2, axis=1)))]
    center = tuple(int(i) for i in np.unravel_index(k, grid.shape))
    x0 = grid.node_coord(center)
    rows = []
    for rho in cfg.hausdorff_rhos:
        deltas = [m * grid.hmin for m in cfg.hausdorff_delta_nodes]
        for m, (delta, content) in zip(cfg.hausdorff_delta_nodes, hausdorff_content(grid, lm, x0, rho, deltas)):
            rows.append((float(rho), int(m), float(delta), content, content / rho ** (grid.dim - 1)))
    return GeometryReport(float(eps), lip, gmin, gnode, nd_lo, nd_hi, dens, harn, por, rows, center,
                          cfg.to_dict())
