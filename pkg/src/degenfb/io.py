"""Field CSV and report JSON, written deterministically."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField

__all__ = ["SCHEMA_VERSION", "write_field_csv", "read_field_csv", "dumps", "write_json", "read_json"]

SCHEMA_VERSION = "1"


def write_field_csv(path, u: ScalarField) -> None:
    """One row per node in C order: ``x[,y],value`` with round-trip precision."""
    grid = u.grid
    names = ["x", "y"][: grid.dim]
    data = np.column_stack([grid.points(), u.values.ravel()])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names + ["value"]) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def read_field_csv(path) -> ScalarField:
    """Inverse of :func:`write_field_csv`; the grid is rebuilt from the coordinates."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header[-1] != "value" or len(header) not in (2, 3):
        raise ValueError(f"{path}: expected header 'x[,y],value', got {header}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dim = len(header) - 1
    axes = [np.unique(data[:, k]) for k in range(dim)]
    n = tuple(len(a) for a in axes)
    if int(np.prod(n)) != len(data):
        raise ValueError(f"{path}: nodes do not form a tensor grid")
    grid = Grid(tuple(float(a[0]) for a in axes), tuple(float(a[-1]) for a in axes), n)
    idx = tuple(np.searchsorted(axes[k], data[:, k]) for k in range(dim))
    vals = np.empty(n)
    vals[idx] = data[:, -1]
    return ScalarField(grid, vals)


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _clean(o):
    # Non-finite floats are not JSON; report them as strings.
    if isinstance(o, float) and not np.isfinite(o):
        return repr(o)
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dumps(obj: dict) -> str:
    payload = {"schema_version": SCHEMA_VERSION, **obj}
    payload = json.loads(json.dumps(payload, default=_default))
    return json.dumps(_clean(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj: dict) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
