"""Explicit radial barrier: flat core, quadratic annulus, power-law tail.

All checks here use the analytic radial derivatives of the profile.  For a
radial function ``f(r)`` the Hessian has eigenvalue ``f''(r)`` along ``x`` and
``f'(r)/r`` with multiplicity ``N - 1`` across it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "BarrierParams",
    "SupersolutionReport",
    "select_params",
    "theta",
    "theta_radial",
    "verify_supersolution",
    "growth_check",
    "scaled_barrier",
    "annulus_bound",
]


@dataclass(frozen=True)
class BarrierParams:
    t0: float
    T0: float
    A0: float
    alpha: float
    L: float
    N: int = 2

    def __post_init__(self):
        if not (0 < self.t0 < self.T0 < 1):
            raise ValueError(f"barrier levels need 0 < t0 < T0 < 1, got t0={self.t0}, T0={self.T0}")
        if not self.A0 > 0:
            raise ValueError("A0 must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.L < self.L0 * (1 - 1e-12):
            raise ValueError(f"L={self.L} is below L0={self.L0}")

    @property
    def gap(self) -> float:
        return self.T0 - self.t0

    @property
    def L0(self) -> float:
        return math.sqrt(self.gap / self.A0)

    @property
    def r_outer(self) -> float:
        """Radius where the quadratic annulus meets the power-law tail."""
        return self.L + self.L0

    @property
    def phi(self) -> float:
        return 2.0 / self.alpha * math.sqrt(self.gap * self.A0) * self.r_outer ** (1.0 + self.alpha)

    @property
    def psi(self) -> float:
        return self.T0 + self.phi * self.r_outer ** (-self.alpha)

    @property
    def kappa0(self) -> float:
        return 1.0 / self.alpha * 2.0 ** (-(self.alpha + 1.0)) * math.sqrt(self.A0 * self.gap)

    def with_L(self, L: float) -> "BarrierParams":
        return BarrierParams(self.t0, self.T0, self.A0, self.alpha, L, self.N)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(L0=self.L0, phi=self.phi, psi=self.psi, kappa0=self.kappa0, r_outer=self.r_outer)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def annulus_bound(A0, N, Lambda, L2, p, q, a_sup, gap):
    """Upper bound of ``H * M^+`` on the annulus as a function of ``A0``."""
    g = 2.0 * np.sqrt(A0 * gap)
    return 4.0 * A0 * N * Lambda * L2 * (g**p + a_sup * g**q)


def select_params(N, lam, Lambda, L1, L2, p, q, a_sup, t0, T0, I_star, L=None) -> BarrierParams:
    """Pick ``alpha`` and the largest admissible ``A0`` for the given ``I*``.

    ``alpha = max((N-1) Lambda/lam - 1, 1)``; ``A0`` is the root of
    ``annulus_bound(A0) = I*`` found by bisection, taking the feasible end of
    the final bracket.  ``L`` defaults to ``L0``.
    """
    if not I_star > 0:
        raise ValueError("I* must be positive")
    if not (0 < lam <= Lambda and 0 < L1 <= L2 and 0 < p <= q and a_sup >= 0):
        raise ValueError("invalid structural constants")
    gap = T0 - t0
    if not (0 < t0 < T0 < 1):
        raise ValueError(f"barrier levels need 0 < t0 < T0 < 1, got t0={t0}, T0={T0}")
    alpha = max((N - 1) * Lambda / lam - 1.0, 1.0)

    def lhs(A):
        return annulus_bound(A, N, Lambda, L2, p, q, a_sup, gap)

    lo, hi = 0.0, 1.0
    while lhs(hi) <= I_star:
        lo, hi = hi, 2.0 * hi
    while lhs(hi) - lhs(lo) > 1e-12 * I_star and hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        if lhs(mid) <= I_star:
            lo = mid
        else:
            hi = mid
    A0 = lo
    L = math.sqrt(gap / A0) if L is None else float(L)
    return BarrierParams(float(t0), float(T0), float(A0), float(alpha), L, int(N))


def theta_radial(bp: BarrierParams, r):
    """``(value, f', f'')`` of the radial profile at radii ``r``."""
    r = np.asarray(r, dtype=float)
    core = r < bp.L
    ann = (r >= bp.L) & (r < bp.r_outer)
    out = ~(core | ann)
    val = np.empty_like(r)
    d1 = np.zeros_like(r)
    d2 = np.zeros_like(r)
    val[core] = bp.t0
    s = r[ann] - bp.L
    val[ann] = bp.A0 * s * s + bp.t0
    d1[ann] = 2.0 * bp.A0 * s
    d2[ann] = 2.0 * bp.A0
    ro = r[out]
    val[out] = bp.psi - bp.phi * ro ** (-bp.alpha)
    d1[out] = bp.alpha * bp.phi * ro ** (-bp.alpha - 1.0)
    d2[out] = -bp.alpha * (bp.alpha + 1.0) * bp.phi * ro ** (-bp.alpha - 2.0)
    return val, d1, d2


def theta(bp: BarrierParams, x):
    """Barrier value at points ``x`` (last axis is the coordinate)."""
    r = np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float)), axis=-1)
    return theta_radial(bp, r)[0]


def _pucci_plus_radial(d1, d2, r, N, lam, Lambda):
    tang = np.where(r > 0, d1 / np.where(r > 0, r, 1.0), d2)

    def w(e):
        return np.where(e > 0, Lambda * e, lam * e)

    return w(d2) + (N - 1) * w(tang)


@dataclass
class SupersolutionReport:
    passed: bool
    worst_margin: float
    worst_radius: float
    region_margins: dict

    def to_dict(self) -> dict:
        return asdict(self)


def verify_supersolution(bp: BarrierParams, deg, lam, Lambda, I_star, samples: int = 1000,
                         tol: float = 1e-10) -> SupersolutionReport:
    """Check ``L2 * K(|grad Theta|) * M^+(D^2 Theta) <= zeta-bound`` region by region.

    The right side is ``I*`` on core and annulus and ``0`` on the tail, whose
    Pucci value is non-positive by the choice of ``alpha``.  ``deg`` supplies
    ``p``, ``q``, ``sup a`` and ``L2``.
    """
    N = bp.N
    a_sup = deg.a_sup()
    r_core = np.linspace(0.0, bp.L, samples, endpoint=False)
    r_ann = np.linspace(bp.L, bp.r_outer, samples, endpoint=False)
    r_tail = bp.r_outer * np.geomspace(1.0, 1e3, samples)
    margins = {}
    worst = (-np.inf, np.nan)
    for name, r, rhs in (("core", r_core, I_star), ("annulus", r_ann, I_star), ("tail", r_tail, 0.0)):
        _, d1, d2 = theta_radial(bp, r)
        g = np.abs(d1)
        H = deg.L2 * (g**deg.p + a_sup * g**deg.q)
        lhs = H * _pucci_plus_radial(d1, d2, r, N, lam, Lambda)
        m = lhs - rhs
        k = int(np.argmax(m))
        margins[name] = float(m[k])
        if m[k] > worst[0]:
            worst = (float(m[k]), float(r[k]))
    return SupersolutionReport(worst[0] <= tol, worst[0], worst[1], margins)


def growth_check(bp: BarrierParams, radii_factors=(4.0, 5.0, 8.0, 16.0)) -> tuple[bool, float]:
    """``Theta(r) >= 4 kappa0 L`` at ``r = c L``; returns (passed, worst margin)."""
    if bp.L < bp.L0 * (1 - 1e-12):
        raise ValueError("growth bound needs L >= L0")
    r = np.asarray(radii_factors, dtype=float) * bp.L
    val = theta_radial(bp, r)[0]
    margin = float((bp.kappa0 * 4.0 * bp.L - val).max())
    return margin <= 0.0, margin


def scaled_barrier(bp: BarrierParams, eps: float, x, eta: float):
    """``eps * Theta_{eta/(4 eps)}(x / eps)``; needs ``eta >= 4 L0 eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    L = eta / (4.0 * eps)
    inner = bp.with_L(L)
    return eps * theta(inner, np.asarray(x, dtype=float) / eps)
