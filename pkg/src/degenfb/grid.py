"""Rectangular lattices, node-indexed fields and central-difference calculus.

Arrays are stored in ``indexing='ij'`` order: ``values[i]`` in 1D and
``values[i, j]`` in 2D, with ``i`` running along x.  Node order for
serialization is C (row-major) order over that array, so x varies slowest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

__all__ = [
    "Grid",
    "ScalarField",
    "SymMatrix",
    "gradient_at",
    "hessian_at",
    "gradient_field",
    "hessian_field",
    "dist_to_set",
    "sup_norm",
    "ball_mask",
    "ball_sup",
    "ball_inf",
]

# Above this many nodes per axis the exact two-pass transform replaces brute force.
BRUTE_FORCE_MAX_NODES = 256


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on the box ``[lo, hi]`` with ``n`` nodes per axis."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        if not (len(lo) == len(hi) == len(n)):
            raise ValueError("lo, hi and n must have the same length")
        if len(n) not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got dim={len(n)}")
        for k in range(len(n)):
            if n[k] < 3:
                raise ValueError(f"need at least 3 nodes per axis, axis {k} has {n[k]}")
            if not hi[k] > lo[k]:
                raise ValueError(f"axis {k}: hi must exceed lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)

    @classmethod
    def unit(cls, n: int, dim: int = 2) -> "Grid":
        return cls((0.0,) * dim, (1.0,) * dim, (n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((b - a) / (m - 1) for a, b, m in zip(self.lo, self.hi, self.n))

    @property
    def hmin(self) -> float:
        return min(self.h)

    def axis(self, k: int) -> np.ndarray:
        """Node coordinates along axis ``k``; endpoints are exactly lo and hi."""
        a, b, m = self.lo[k], self.hi[k], self.n[k]
        x = a + (b - a) * (np.arange(m) / (m - 1))
        x[0], x[-1] = a, b
        return x

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays broadcast to ``shape`` (meshgrid, ij indexing)."""
        return list(np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij"))

    def points(self) -> np.ndarray:
        """``(size, dim)`` array of node coordinates in node order."""
        return np.stack([c.ravel() for c in self.coords()], axis=1)

    def node_coord(self, node: Sequence[int]) -> np.ndarray:
        node = self._check_node(node)
        return np.array([self.axis(k)[node[k]] for k in range(self.dim)])

    def nearest_node(self, x: Sequence[float]) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint((x - np.array(self.lo)) / np.array(self.h)).astype(int)
        idx = np.clip(idx, 0, np.array(self.n) - 1)
        return tuple(int(i) for i in idx)

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[k] = 0
            m[tuple(sl)] = True
            sl[k] = -1
            m[tuple(sl)] = True
        return m

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        """Nodes at least ``margin`` nodes away from every face."""
        m = np.zeros(self.shape, dtype=bool)
        sl = tuple(slice(margin, s - margin) for s in self.shape)
        m[sl] = True
        return m

    def _check_node(self, node) -> tuple[int, ...]:
        node = tuple(int(i) for i in np.atleast_1d(node))
        if len(node) != self.dim:
            raise ValueError(f"node {node} does not match grid dimension {self.dim}")
        for k, i in enumerate(node):
            if not 0 <= i < self.n[k]:
                raise IndexError(f"node {node} outside grid")
        return node

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "n": list(self.n)}


@dataclass(frozen=True)
class ScalarField:
    """Finite real values on every node of a grid.  Immutable once built."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "ScalarField":
        vals = np.broadcast_to(np.asarray(fn(*grid.coords()), dtype=float), grid.shape)
        return cls(grid, vals)

    def __getitem__(self, node):
        return self.values[node]

    def sup(self) -> float:
        return float(self.values.max())

    def inf(self) -> float:
        return float(self.values.min())

    def abs_sup(self) -> float:
        return float(np.abs(self.values).max())

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric matrix of size 1 or 2 holding only the upper triangle.

    Entries may be numpy arrays, in which case every operation acts
    elementwise on a batch of matrices.
    """

    xx: np.ndarray | float
    xy: np.ndarray | float = 0.0
    yy: np.ndarray | float = 0.0
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("SymMatrix supports dimension 1 or 2")

    @classmethod
    def from_array(cls, a) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        if a.shape[-2:] == (1, 1):
            return cls(a[..., 0, 0], dim=1)
        if a.shape[-2:] != (2, 2):
            raise ValueError("expected a (..., 2, 2) or (..., 1, 1) array")
        return cls(a[..., 0, 0], 0.5 * (a[..., 0, 1] + a[..., 1, 0]), a[..., 1, 1])

    @classmethod
    def diag(cls, *d) -> "SymMatrix":
        if len(d) == 1:
            return cls(d[0], dim=1)
        return cls(d[0], 0.0, d[1])

    @classmethod
    def identity(cls, dim: int = 2) -> "SymMatrix":
        return cls(1.0, dim=1) if dim == 1 else cls(1.0, 0.0, 1.0)

    def to_array(self) -> np.ndarray:
        if self.dim == 1:
            return np.asarray(self.xx, dtype=float)[..., None, None]
        xx, xy, yy = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (self.xx, self.xy, self.yy)))
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    def trace(self):
        return self.xx if self.dim == 1 else self.xx + self.yy

    def eigenvalues(self) -> tuple:
        """Closed-form eigenvalues in ascending order."""
        if self.dim == 1:
            return (self.xx,)
        half_tr = 0.5 * (self.xx + self.yy)
        disc = np.hypot(0.5 * (self.xx - self.yy), self.xy)
        return half_tr - disc, half_tr + disc

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.xx + other.xx, self.xy + other.xy, self.yy + other.yy, self.dim)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.xx - other.xx, self.xy - other.xy, self.yy - other.yy, self.dim)

    def __neg__(self) -> "SymMatrix":
        return SymMatrix(-self.xx, -self.xy, -self.yy, self.dim)

    def scale(self, c) -> "SymMatrix":
        return SymMatrix(c * self.xx, c * self.xy, c * self.yy, self.dim)


def _require_interior(field: ScalarField, node, depth: int = 1) -> tuple[int, ...]:
    node = field.grid._check_node(node)
    for k, i in enumerate(node):
        if i < depth or i > field.grid.n[k] - 1 - depth:
            raise ValueError(f"node {node} is within {depth} node(s) of the boundary")
    return node


def gradient_at(field: ScalarField, node) -> np.ndarray:
    """Central-difference gradient at a strictly interior node."""
    node = _require_interior(field, node)
    u, h = field.values, field.grid.h
    g = np.empty(field.grid.dim)
    for k in range(field.grid.dim):
        fwd = list(node)
        bwd = list(node)
        fwd[k] += 1
        bwd[k] -= 1
        g[k] = (u[tuple(fwd)] - u[tuple(bwd)]) / (2.0 * h[k])
    return g


def hessian_at(field: ScalarField, node) -> SymMatrix:
    """Second differences with the 4-point diagonal stencil for the cross term."""
    node = _require_interior(field, node)
    u, h = field.values, field.grid.h
    if field.grid.dim == 1:
        (i,) = node
        return SymMatrix((u[i + 1] - 2.0 * u[i] + u[i - 1]) / h[0] ** 2, dim=1)
    i, j = node
    hx, hy = h
    uxx = (u[i + 1, j] - 2.0 * u[i, j] + u[i - 1, j]) / hx**2
    uyy = (u[i, j + 1] - 2.0 * u[i, j] + u[i, j - 1]) / hy**2
    uxy = (u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1] + u[i - 1, j - 1]) / (4.0 * hx * hy)
    return SymMatrix(uxx, uxy, uyy)


def gradient_field(field: ScalarField) -> np.ndarray:
    """Central gradients at all interior nodes, shape ``interior_shape + (dim,)``."""
    u, h = field.values, field.grid.h
    if field.grid.dim == 1:
        return ((u[2:] - u[:-2]) / (2.0 * h[0]))[:, None]
    gx = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * h[0])
    gy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * h[1])
    return np.stack([gx, gy], axis=-1)


def hessian_field(field: ScalarField) -> SymMatrix:
    """Batched version of :func:`hessian_at` over all interior nodes."""
    u, h = field.values, field.grid.h
    if field.grid.dim == 1:
        return SymMatrix((u[2:] - 2.0 * u[1:-1] + u[:-2]) / h[0] ** 2, dim=1)
    hx, hy = h
    c = u[1:-1, 1:-1]
    uxx = (u[2:, 1:-1] - 2.0 * c + u[:-2, 1:-1]) / hx**2
    uyy = (u[1:-1, 2:] - 2.0 * c + u[1:-1, :-2]) / hy**2
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4.0 * hx * hy)
    return SymMatrix(uxx, uxy, uyy)


def _mask_frontier(mask: np.ndarray) -> np.ndarray:
    """Mask nodes having a face neighbour outside the mask.

    The nearest mask node to any outside node always lies on this frontier,
    so brute-force distances only need these candidates.
    """
    interior = ndimage.binary_erosion(mask, border_value=1)
    return mask & ~interior


def _brute_force_distance(grid: Grid, mask: np.ndarray) -> np.ndarray:
    pts = grid.points()
    cand = pts[_mask_frontier(mask).ravel()]
    out = np.empty(len(pts))
    chunk = max(1, 4_000_000 // max(len(cand), 1))
    for s in range(0, len(pts), chunk):
        diff = pts[s : s + chunk, None, :] - cand[None, :, :]
        out[s : s + chunk] = np.sqrt(np.min(np.sum(diff * diff, axis=-1), axis=1))
    return out.reshape(grid.shape)


def _two_pass_distance(grid: Grid, mask: np.ndarray) -> np.ndarray:
    # Exact EDT for the nearest mask node, then the distance in the same
    # arithmetic as the brute-force path.
    _, idx = ndimage.distance_transform_edt(~mask, sampling=grid.h, return_indices=True)
    d2 = np.zeros(grid.shape)
    own = np.indices(grid.shape)
    for k in range(grid.dim):
        ax = grid.axis(k)
        dk = ax[own[k]] - ax[idx[k]]
        d2 += dk * dk
    return np.sqrt(d2)


def dist_to_set(grid: Grid, mask) -> ScalarField:
    """Exact Euclidean distance from every node to the nearest node of ``mask``."""
    mask = np.asarray(mask, dtype=bool).reshape(grid.shape)
    if not mask.any():
        raise ValueError("distance to an empty set is undefined")
    if max(grid.n) <= BRUTE_FORCE_MAX_NODES:
        d = _brute_force_distance(grid, mask)
    else:
        d = _two_pass_distance(grid, mask)
    d[mask] = 0.0
    return ScalarField(grid, d)


def sup_norm(field: ScalarField, region=None) -> float:
    """Exact max of ``|u|`` over the region (boolean mask or predicate on coordinates)."""
    sel = _region(field.grid, region)
    return float(np.abs(field.values[sel]).max())


def _region(grid: Grid, region) -> np.ndarray:
    if region is None:
        sel = np.ones(grid.shape, dtype=bool)
    elif callable(region):
        sel = np.broadcast_to(np.asarray(region(*grid.coords()), dtype=bool), grid.shape)
    else:
        sel = np.asarray(region, dtype=bool).reshape(grid.shape)
    if not sel.any():
        raise ValueError("region contains no nodes")
    return sel


def region_sup(field: ScalarField, region=None) -> float:
    return float(field.values[_region(field.grid, region)].max())


def region_inf(field: ScalarField, region=None) -> float:
    return float(field.values[_region(field.grid, region)].min())


def ball_mask(grid: Grid, center, rho: float) -> np.ndarray:
    """Nodes in the closed discrete ball ``|x - center| <= rho``."""
    c = np.asarray(center, dtype=float)
    d2 = sum((x - c[k]) ** 2 for k, x in enumerate(grid.coords()))
    return d2 <= rho * rho * (1.0 + 1e-12)


def ball_sup(field: ScalarField, center, rho: float) -> float:
    return region_sup(field, ball_mask(field.grid, center, rho))


def ball_inf(field: ScalarField, center, rho: float) -> float:
    return region_inf(field, ball_mask(field.grid, center, rho))
