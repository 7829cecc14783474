"""Singular reaction family ``zeta_eps(x, t) = Q(x)/eps * zeta(t/eps) + f_eps(x)``."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from .grid import Grid, ScalarField

__all__ = [
    "bump",
    "bump_prime",
    "bump_constant",
    "bump_max",
    "bump_prime_max",
    "bump_antiderivative",
    "ReactionParams",
    "ReactionConstants",
    "CertificationError",
    "zeta_eps",
    "certify",
]


class CertificationError(ValueError):
    """The reaction lacks singular character on the requested level interval."""


def _raw_bump(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    s = np.where(inside, t, 0.5)
    return np.where(inside, np.exp(-1.0 / (s * (1.0 - s))), 0.0)


@functools.lru_cache(maxsize=None)
def bump_constant() -> float:
    """Normalising constant ``c`` making the bump integrate to one."""
    val, _ = integrate.quad(lambda s: float(_raw_bump(s)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 / val


def bump(t):
    """Smooth bump supported on ``[0, 1]`` with unit integral."""
    out = bump_constant() * _raw_bump(t)
    return float(out) if np.ndim(out) == 0 else out


def bump_prime(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    s = np.where(inside, t, 0.5)
    w = s * (1.0 - s)
    e = np.exp(-1.0 / w)
    # Near t = 0 or 1 both e and w * w underflow; the limit there is 0.
    with np.errstate(invalid="ignore", over="ignore"):
        d = bump_constant() * e * (1.0 - 2.0 * s) / (w * w)
    out = np.where(inside & (e > 0.0), d, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def bump_max() -> float:
    # exp(-1/(t(1-t))) peaks where t(1-t) does.
    return bump(0.5)


@functools.lru_cache(maxsize=None)
def bump_prime_max() -> float:
    t = np.linspace(0.0, 1.0, 200001)
    return float(np.abs(bump_prime(t)).max())


def bump_antiderivative(s) -> float:
    """``int_0^s zeta``, equal to 1 for ``s >= 1``."""
    s = float(s)
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    val, _ = integrate.quad(lambda t: float(bump(t)), 0.0, s, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


FieldLike = Union[ScalarField, float]


def _values(f: FieldLike, grid: Grid | None):
    if isinstance(f, ScalarField):
        return f.values
    if grid is None:
        return float(f)
    return np.full(grid.shape, float(f))


def _sup(f: FieldLike) -> float:
    return f.sup() if isinstance(f, ScalarField) else float(f)


def _inf(f: FieldLike) -> float:
    return f.inf() if isinstance(f, ScalarField) else float(f)


@dataclass(frozen=True)
class ReactionParams:
    """Data of the reaction: ``eps``, intensity ``Q > 0`` and forcing ``f_eps >= 0``.

    ``Q`` and ``f`` are fields or constants.  ``Q = 0`` is accepted only to
    switch the singular part off for homogeneous solves.
    """

    eps: float
    Q: FieldLike = 1.0
    f: FieldLike = 0.0

    def __post_init__(self):
        errs = self.check()
        if errs:
            raise ValueError("; ".join(errs))

    def check(self) -> list[str]:
        errs = []
        if not (self.eps > 0 and np.isfinite(self.eps)):
            errs.append(f"eps must be positive, got {self.eps}")
        if _inf(self.Q) < 0:
            errs.append("Q must be non-negative (positive for a genuine singular reaction)")
        if _inf(self.f) < 0:
            errs.append("f_eps must be non-negative")
        return errs

    @property
    def is_zero(self) -> bool:
        return _sup(self.Q) == 0.0 and _sup(self.f) == 0.0

    @property
    def A(self) -> float:
        return _sup(self.Q) * bump_max()

    @property
    def B0(self) -> float:
        return _inf(self.f)

    @property
    def B(self) -> float:
        return _sup(self.f)

    @property
    def I_zeta(self) -> float:
        return 1.0

    def Q_values(self, grid: Grid | None = None):
        return _values(self.Q, grid)

    def f_values(self, grid: Grid | None = None):
        return _values(self.f, grid)

    def with_eps(self, eps: float) -> "ReactionParams":
        return ReactionParams(eps, self.Q, self.f)

    def evaluate(self, Qv, fv, t):
        """Vectorised ``zeta_eps`` for local ``Q``/``f`` values and levels ``t``."""
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return Qv / self.eps * bump(t / self.eps) + fv

    def derivative(self, Qv, t):
        """``d zeta_eps / dt``; zero for ``t < 0`` (constant extension)."""
        t = np.asarray(t, dtype=float)
        d = Qv / self.eps**2 * bump_prime(np.maximum(t, 0.0) / self.eps)
        return np.where(t > 0, d, 0.0)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "Q": self.Q if not isinstance(self.Q, ScalarField) else "field",
            "f": self.f if not isinstance(self.f, ScalarField) else "field",
        }


def _at(f: FieldLike, x):
    if isinstance(f, ScalarField):
        return float(f.values[tuple(np.atleast_1d(x))])
    return float(f)


def zeta_eps(r: ReactionParams, x, t: float) -> float:
    """Reaction at node ``x`` and level ``t``; levels below 0 use the value at 0."""
    return float(r.evaluate(_at(r.Q, x), _at(r.f, x), t))


@dataclass(frozen=True)
class ReactionConstants:
    A: float
    B0: float
    B: float
    I: float
    I_sampling_error: float
    t0: float
    T0: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def certify(r: ReactionParams, t0: float, T0: float, samples: int = 1000) -> ReactionConstants:
    """Bounds ``A, B0, B`` and the non-degeneracy level ``I`` on ``[t0, T0]``.

    ``I`` is the infimum of ``eps * zeta_eps(x, eps t) = Q(x) zeta(t) + eps f(x)``
    sampled at ``samples`` levels; ``I_sampling_error`` bounds the gap to the
    true infimum through the Lipschitz constant of the bump.
    """
    if not (0 <= t0 < T0 < np.inf):
        raise ValueError(f"need 0 <= t0 < T0 < inf, got t0={t0}, T0={T0}")
    ts = np.linspace(t0, T0, samples)
    # Q(x) zeta(t) + eps f(x) is monotone in each of Q and f, so the infimum
    # over nodes is attained at inf Q and inf f.
    qmin, fmin = _inf(r.Q), _inf(r.f)
    vals = qmin * bump(ts) + r.eps * fmin
    I = float(vals.min())
    err = qmin * bump_prime_max() * (T0 - t0) / (samples - 1) / 2.0
    if I <= 0:
        raise CertificationError(
            f"reaction is not singular on [{t0}, {T0}]: inf eps*zeta_eps(x, eps t) = {I}"
        )
    return ReactionConstants(r.A, r.B0, r.B, I, float(err), float(t0), float(T0))
