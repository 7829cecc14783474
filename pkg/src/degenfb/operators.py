"""Degeneracy law, uniformly elliptic operators and their product.

Every operator acts on :class:`~degenfb.grid.SymMatrix` batches through the
closed-form 2x2 eigenvalues, so Pucci identities hold to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np
from scipy import optimize

from .grid import ScalarField, SymMatrix, gradient_at, hessian_at

__all__ = [
    "DegeneracyParams",
    "PucciPlus",
    "PucciMinus",
    "Laplacian",
    "HessianFm",
    "OperatorKind",
    "degeneracy",
    "degeneracy_norm",
    "pucci",
    "hessian_fm",
    "recession",
    "acp_check",
    "AcpReport",
    "full_operator",
    "operator_from_dict",
]


@dataclass(frozen=True)
class DegeneracyParams:
    """``H(x, xi) = |xi|^p + a(x) |xi|^q``.

    ``a`` is a :class:`ScalarField` or a constant.  ``L1``/``L2`` are the
    comparability constants of the law; ``H`` itself is implemented with
    ``L1 = L2 = 1``.  ``synthetic=True`` gives the non-degenerate ``H = 1``
    used by the pure ``F = 0`` comparison solves.
    """

    p: float
    q: float
    a: Union[ScalarField, float] = 0.0
    L1: float = 1.0
    L2: float = 1.0
    synthetic: bool = False

    def __post_init__(self):
        errors = self.check()
        if errors:
            raise ValueError("; ".join(errors))

    def check(self) -> list[str]:
        errs = []
        if self.synthetic:
            return errs
        if not (0 < self.p <= self.q < np.inf):
            errs.append(f"degeneracy exponents must satisfy 0 < p <= q < inf (p={self.p}, q={self.q})")
        if self.a_sup() < 0 or self.a_inf() < 0:
            errs.append("modulating function a must be non-negative")
        if not (0 < self.L1 <= self.L2 < np.inf):
            errs.append(f"need 0 < L1 <= L2 (L1={self.L1}, L2={self.L2})")
        return errs

    @classmethod
    def unit(cls) -> "DegeneracyParams":
        return cls(p=0.0, q=0.0, a=0.0, synthetic=True)

    def a_values(self, grid=None):
        if isinstance(self.a, ScalarField):
            return self.a.values
        if grid is not None:
            return np.full(grid.shape, float(self.a))
        return float(self.a)

    def a_sup(self) -> float:
        return self.a.sup() if isinstance(self.a, ScalarField) else float(self.a)

    def a_inf(self) -> float:
        return self.a.inf() if isinstance(self.a, ScalarField) else float(self.a)

    def a_at(self, node) -> float:
        if isinstance(self.a, ScalarField):
            return float(self.a.values[tuple(np.atleast_1d(node))])
        return float(self.a)

    def h_of_norm(self, g, a):
        """``H`` as a function of ``|xi|`` and the local ``a``."""
        if self.synthetic:
            return np.ones_like(np.asarray(g, dtype=float))
        g = np.asarray(g, dtype=float)
        return _power(g, self.p) + a * _power(g, self.q)

    def dh_of_norm(self, g, a):
        """``dH/d|xi|``; set to 0 where ``|xi| = 0`` (one-sided choice)."""
        if self.synthetic:
            return np.zeros_like(np.asarray(g, dtype=float))
        g = np.asarray(g, dtype=float)
        pos = g > 0
        safe = np.where(pos, g, 1.0)
        d = self.p * safe ** (self.p - 1.0) + a * self.q * safe ** (self.q - 1.0)
        return np.where(pos, d, 0.0)

    def to_dict(self) -> dict:
        a = self.a if not isinstance(self.a, ScalarField) else "field"
        return {"p": self.p, "q": self.q, "a": a, "L1": self.L1, "L2": self.L2, "synthetic": self.synthetic}


def _power(g, e):
    # 0**e with e > 0 is 0; e == 0 gives 1 (only reached by the synthetic law).
    if e == 1.0:
        return g
    if e == 2.0:
        return g * g
    return g**e


def degeneracy_norm(d: DegeneracyParams, a, g):
    return d.h_of_norm(g, a)


def degeneracy(d: DegeneracyParams, x, xi) -> float:
    """Evaluate ``H(x, xi)``; ``x`` is a node index."""
    g = float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))
    return float(d.h_of_norm(g, d.a_at(x)))


class _Spectral:
    """Operators of the form ``sum_j f(e_j(X))``."""

    code: ClassVar[int]
    name: ClassVar[str]

    def f(self, e):
        raise NotImplementedError

    def fprime(self, e):
        raise NotImplementedError

    def __call__(self, X: SymMatrix):
        return sum(self.f(e) for e in X.eigenvalues())

    def derivative(self, X: SymMatrix):
        """``(dF/dX_xx, dF/dX_xy, dF/dX_yy)`` with ``X_xy`` the stored off-diagonal."""
        if X.dim == 1:
            return self.fprime(X.xx), 0.0, 0.0
        e_lo, e_hi = X.eigenvalues()
        d = 0.5 * (np.asarray(X.xx) - np.asarray(X.yy))
        r = np.hypot(d, X.xy)
        safe = np.where(r > 0, r, 1.0)
        cd = np.where(r > 0, d / safe, 1.0)
        cb = np.where(r > 0, np.asarray(X.xy) / safe, 0.0)
        f_hi, f_lo = self.fprime(e_hi), self.fprime(e_lo)
        dxx = 0.5 * (f_hi + f_lo) + 0.5 * cd * (f_hi - f_lo)
        dyy = 0.5 * (f_hi + f_lo) - 0.5 * cd * (f_hi - f_lo)
        dxy = cb * (f_hi - f_lo)
        return dxx, dxy, dyy

    @property
    def upper(self) -> float:
        """Largest ellipticity constant, used for explicit time-step bounds."""
        return getattr(self, "Lambda", 1.0)

    @property
    def lower(self) -> float:
        return getattr(self, "lam", 1.0)


@dataclass(frozen=True)
class Laplacian(_Spectral):
    code: ClassVar[int] = 0
    name: ClassVar[str] = "laplacian"

    def f(self, e):
        return e

    def fprime(self, e):
        return np.ones_like(np.asarray(e, dtype=float))

    def __call__(self, X: SymMatrix):
        return X.trace()

    def to_dict(self) -> dict:
        return {"kind": self.name}


@dataclass(frozen=True)
class _PucciBase(_Spectral):
    lam: float = 1.0
    Lambda: float = 1.0

    def __post_init__(self):
        if not (0 < self.lam <= self.Lambda < np.inf):
            raise ValueError(f"ellipticity constants must satisfy 0 < lambda <= Lambda, got {self.lam}, {self.Lambda}")

    def to_dict(self) -> dict:
        return {"kind": self.name, "lambda": self.lam, "Lambda": self.Lambda}


@dataclass(frozen=True)
class PucciPlus(_PucciBase):
    code: ClassVar[int] = 1
    name: ClassVar[str] = "pucci_plus"

    def f(self, e):
        return np.where(e > 0, self.Lambda * e, self.lam * e)

    def fprime(self, e):
        return np.where(np.asarray(e) > 0, self.Lambda, self.lam).astype(float)


@dataclass(frozen=True)
class PucciMinus(_PucciBase):
    code: ClassVar[int] = 2
    name: ClassVar[str] = "pucci_minus"

    def f(self, e):
        return np.where(e > 0, self.lam * e, self.Lambda * e)

    def fprime(self, e):
        return np.where(np.asarray(e) > 0, self.lam, self.Lambda).astype(float)


def _odd_root(v, m):
    return np.sign(v) * np.abs(v) ** (1.0 / m)


@dataclass(frozen=True)
class HessianFm(_Spectral):
    """``F_m(X) = sum_j (1 + e_j^m)^(1/m) - N`` with the real odd root.

    ``lam``/``Lambda`` are only used to bound explicit time steps; ``F_m`` is
    degenerate at ``e = 0`` and its slope is unbounded near ``e = -1``.
    """

    m: int = 3
    lam: float = 1.0
    Lambda: float = 1.0
    code: ClassVar[int] = 3
    name: ClassVar[str] = "hessian_fm"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1 or self.m % 2 == 0:
            raise ValueError(f"m must be an odd positive integer, got {self.m}")
        if not (0 < self.lam <= self.Lambda < np.inf):
            raise ValueError("ellipticity constants must satisfy 0 < lambda <= Lambda")

    def f(self, e):
        e = np.asarray(e, dtype=float)
        return _odd_root(1.0 + e**self.m, self.m) - 1.0

    def fprime(self, e):
        e = np.asarray(e, dtype=float)
        v = np.abs(1.0 + e**self.m)
        with np.errstate(divide="ignore"):
            d = e ** (self.m - 1) * np.where(v > 0, v, np.inf) ** (1.0 / self.m - 1.0)
        return np.minimum(np.where(v > 0, d, 1e8), 1e8)

    def to_dict(self) -> dict:
        return {"kind": self.name, "m": int(self.m), "lambda": self.lam, "Lambda": self.Lambda}


OperatorKind = Union[Laplacian, PucciPlus, PucciMinus, HessianFm]


def operator_from_dict(d: dict) -> OperatorKind:
    kind = d.get("kind")
    if kind == "laplacian":
        return Laplacian()
    lam = float(d.get("lambda", 1.0))
    Lam = float(d.get("Lambda", 1.0))
    if kind == "pucci_plus":
        return PucciPlus(lam, Lam)
    if kind == "pucci_minus":
        return PucciMinus(lam, Lam)
    if kind == "hessian_fm":
        return HessianFm(int(d.get("m", 3)), lam, Lam)
    raise ValueError(f"unknown operator kind {kind!r}")


def pucci(kind, X: SymMatrix):
    """Pucci extremal operator ``M^+`` or ``M^-`` applied to ``X``."""
    if not isinstance(kind, _PucciBase):
        raise TypeError("pucci() expects PucciPlus or PucciMinus")
    return kind(X)


def hessian_fm(m: int, X: SymMatrix):
    return HessianFm(m)(X)


def recession(kind: OperatorKind, X: SymMatrix, tau: float):
    """``tau * F(X / tau)``; the recession operator is its limit as tau -> 0+."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return tau * kind(X.scale(1.0 / tau))


def _fm_gap(m: int, e):
    return _odd_root(1.0 + e**m, m) - 1.0 - e


def acp_constant(m: int, dim: int = 2) -> float:
    """Smallest ``C*`` with ``F_m(X) <= tr X + C*`` for all ``X``.

    The per-eigenvalue gap ``(1+e^m)^(1/m) - 1 - e`` is non-positive outside
    ``(-1, 0)``, so the supremum is a bounded scalar maximisation there.
    """
    res = optimize.minimize_scalar(lambda e: -_fm_gap(m, e), bounds=(-1.0, 0.0), method="bounded",
                                   options={"xatol": 1e-13})
    grid = np.linspace(-1.0, 0.0, 20001)
    best = max(float(-res.fun), float(_fm_gap(m, grid).max()))
    return dim * best


@dataclass
class AcpReport:
    passed: bool
    margin: float
    raw_margin: float
    c_star: float
    worst: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "margin": self.margin, "raw_margin": self.raw_margin, "c_star": self.c_star}


def acp_check(kind: HessianFm, samples: int, seed: int = 0, c_star: float | None = None,
              bound: float = 100.0, dim: int = 2) -> AcpReport:
    """Check ``F_m(X) <= tr(X) + C*`` on random symmetric matrices.

    ``margin`` is ``max(F_m - tr - C*)`` and must be ``<= 1e-12``;
    ``raw_margin`` is ``max(F_m - tr)``, the margin against ``C* = 0``.
    When ``c_star`` is omitted the sharp constant :func:`acp_constant` is used.
    """
    if not isinstance(kind, HessianFm):
        raise TypeError("acp_check applies to HessianFm operators")
    if c_star is None:
        c_star = acp_constant(kind.m, dim)
    rng = np.random.default_rng(seed)
    ent = rng.uniform(-bound, bound, size=(samples, 3))
    X = SymMatrix(ent[:, 0], ent[:, 1], ent[:, 2]) if dim == 2 else SymMatrix(ent[:, 0], dim=1)
    gap = kind(X) - X.trace()
    k = int(np.argmax(gap))
    raw = float(gap[k])
    margin = raw - c_star
    return AcpReport(margin <= 1e-12, margin, raw, float(c_star), ent[k])


def full_operator(spec, field: ScalarField, node) -> float:
    """``H(x, grad_h u) * F(D_h^2 u)`` at an interior node of ``field``."""
    xi = gradient_at(field, node)
    X = hessian_at(field, node)
    return float(degeneracy(spec.deg, node, xi) * spec.op(X))
