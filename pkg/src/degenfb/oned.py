"""One-dimensional travelling profiles and the limiting slope law.

In 1D with ``Q = 1`` and no forcing, ``(|u'|^p + kappa |u'|^q) u'' = zeta_eps(u)``
has the first integral

    s^{p+2}/(p+2) + kappa s^{q+2}/(q+2) = Z(u/eps),   Z(t) = int_0^t zeta,

with ``s = |u'|``.  Above the layer ``Z = 1`` and the slope is frozen at the
root of the law with ``I = int zeta = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .grid import Grid, ScalarField
from .operators import DegeneracyParams, Laplacian
from .reaction import ReactionParams, bump_antiderivative

__all__ = [
    "SlopeLaw",
    "slope_from_law",
    "law_residual",
    "ProfileResult",
    "integrate_profile",
    "CrossValidation",
    "cross_validate",
]


@dataclass(frozen=True)
class SlopeLaw:
    p: float
    q: float
    kappa: float = 0.0
    I: float = 1.0

    def __post_init__(self):
        errs = []
        if not self.p >= 0:
            errs.append("p must be non-negative")
        if not self.q >= self.p:
            errs.append("q must satisfy q >= p")
        if not self.kappa >= 0:
            errs.append("kappa must be non-negative")
        if not self.I >= 0:
            errs.append("I must be non-negative")
        if errs:
            raise ValueError("; ".join(errs))

    def lhs(self, s):
        s = np.asarray(s, dtype=float)
        return s ** (self.p + 2) / (self.p + 2) + self.kappa * s ** (self.q + 2) / (self.q + 2)

    def with_I(self, I: float) -> "SlopeLaw":
        return replace(self, I=float(I))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def slope_from_law(law: SlopeLaw, tol: float = 1e-12) -> float:
    """Positive root of ``law.lhs(s) = I`` by bisection (0 when ``I = 0``)."""
    if law.I == 0:
        return 0.0
    # The p-term alone gives an upper bound for the root.
    hi = ((law.p + 2) * law.I) ** (1.0 / (law.p + 2)) * (1 + 1e-9)
    lo = 0.0
    # Relative stop: deep in the layer the root is tiny and 1/s is integrated.
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if law.lhs(mid) < law.I:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def law_residual(law: SlopeLaw, s: float) -> float:
    return float(law.lhs(s) - law.I)


@dataclass
class ProfileResult:
    """Travelling profile on ``[t_min eps, eps]``; ``x = 0`` where ``u = eps``."""

    slope: float
    u: np.ndarray
    x: np.ndarray
    s: np.ndarray
    identity_residual: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "identity_residual": self.identity_residual,
                "u": self.u.tolist(), "x": self.x.tolist(), "s": self.s.tolist()}


def integrate_profile(p, q, kappa, reaction: ReactionParams, samples: int = 65, t_min: float = 0.02,
                      antiderivative=None, quad_tol: float = 1e-10) -> ProfileResult:
    """Slope ``|u'|`` at ``u = eps`` and the profile inside the layer.

    Each slope comes from the first integral (no ODE shooting).  Positions
    solve ``dx/du = 1/|u'(u)|`` with ``x(eps) = 0``.  Since the bump is flat to
    infinite order at 0, ``x(u)`` diverges as ``u -> 0``; samples stop at
    ``u = t_min * eps``.  ``antiderivative`` overrides ``Z`` (for tests with
    other reaction shapes).
    """
    if not p > 0:
        raise ValueError("p must be positive")
    Q, f = reaction.Q, reaction.f
    if not (np.isscalar(Q) and float(Q) == 1.0 and np.isscalar(f) and float(f) == 0.0):
        raise ValueError("integrate_profile needs Q = 1 and f = 0")
    if not 0 < t_min < 1:
        raise ValueError("t_min must lie in (0, 1)")
    eps = reaction.eps
    Z = antiderivative or bump_antiderivative
    law = SlopeLaw(p, q, kappa, 1.0)

    def slope_at(u):
        return slope_from_law(law.with_I(Z(u / eps)))

    top = slope_from_law(law.with_I(Z(1.0)))
    us = eps * np.linspace(t_min, 1.0, samples)
    ss = np.array([slope_at(u) for u in us])
    xs = np.zeros_like(us)
    for k in range(samples - 2, -1, -1):
        val, err = integrate.quad(lambda v: 1.0 / slope_at(v), us[k], us[k + 1],
                                  epsabs=quad_tol * eps, epsrel=quad_tol, limit=200)
        if not math.isfinite(val) or err > 1e3 * quad_tol * max(1.0, abs(val)):
            raise RuntimeError(f"profile quadrature failed on [{us[k]:.3g}, {us[k + 1]:.3g}]")
        xs[k] = xs[k + 1] - val
    ident = max(abs(law_residual(law.with_I(Z(u / eps)), s)) for u, s in zip(us, ss))
    return ProfileResult(float(top), us, xs, ss, float(ident))


@dataclass
class CrossValidation:
    law_slope: float
    solver_slope: float
    discrepancy: float
    h: float
    eps: float
    iterations: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cross_validate(p, q, kappa, eps, h, length: float = 0.25, Q: float = 1.0, cfg=None) -> CrossValidation:
    """Solve the two-point problem on ``[0, length]`` and compare slopes.

    Data: ``u(0) = s* length / 2``, ``u(length) = 0`` with ``s*`` the law
    slope, so the layer sits near the middle.  The solver slope is the
    centred difference two nodes above the last node with ``u > eps``.  With
    ``Q = 0`` the reference is the linear interpolant of the data.
    """
    from .solver import SolveConfig, ProblemSpec, solve_peps

    n = int(round(length / h)) + 1
    if abs((n - 1) * h - length) > 1e-9 * length:
        raise ValueError("length must be a multiple of h")
    grid = Grid((0.0,), (length,), (n,))
    law_s = slope_from_law(SlopeLaw(p, q, kappa, 1.0))
    g0 = law_s * length / 2.0
    g = ScalarField.from_function(grid, lambda x: g0 * (1.0 - x / length))
    deg = DegeneracyParams(p, q, kappa)
    spec = ProblemSpec(grid, deg, Laplacian(), ReactionParams(eps, Q, 0.0), g)
    cfg = cfg or SolveConfig(scheme="implicit", min_layer_nodes=4.0)
    res = solve_peps(spec, cfg)
    u = res.u.values
    if Q == 0:
        ref = g0 / length
    else:
        ref = law_s
    above = np.flatnonzero(u > eps)
    j = int(above.max())
    k = j - 2
    if k < 1:
        raise RuntimeError("layer touches the left end; enlarge the domain")
    s_num = float(abs(u[k + 1] - u[k - 1]) / (2.0 * h))
    return CrossValidation(float(ref), s_num, abs(s_num - ref) / ref, float(h), float(eps), res.iterations)
