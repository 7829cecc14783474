"""Small argument checks shared by the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np

from .grid import Grid, ScalarField


def check_scalar(x, name, *, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    """Return ``x`` as float (or int) after type and range checks."""
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(x, bool) or not isinstance(x, kind):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a real number'}, got {type(x).__name__}")
    x = int(x) if integer else float(x)
    if not np.isfinite(x):
        raise ValueError(f"{name} must be finite")
    if lo is not None and (x <= lo if lo_open else x < lo):
        raise ValueError(f"{name}={x} must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and (x >= hi if hi_open else x > hi):
        raise ValueError(f"{name}={x} must be {'<' if hi_open else '<='} {hi}")
    return x


def check_field(u, name="u", grid: Grid | None = None) -> ScalarField:
    """Accept a :class:`ScalarField` (optionally on a given grid)."""
    if not isinstance(u, ScalarField):
        raise TypeError(f"{name} must be a ScalarField, got {type(u).__name__}")
    if grid is not None and u.grid != grid:
        raise ValueError(f"{name} lives on a different grid")
    return u


def check_points(points, dim: int) -> np.ndarray:
    """Coerce query points to a finite float array of shape ``(m, dim)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, dim) if dim > 1 else pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"points must have shape (m, {dim}), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def check_is_fitted(est, attr):
    if not hasattr(est, attr):
        raise RuntimeError(f"{type(est).__name__} is not fitted yet; call fit first")
