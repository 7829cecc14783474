"""Discrete solves of ``H(x, grad u) F(D^2 u) = zeta_eps(x, u)``, ``u = g`` on the boundary.

Two pseudo-time integrators share the residual and the one-phase projection
``u := max(u, 0)``:

``explicit``
    Jacobi-type forward Euler, ``u += dt * R(u)`` with
    ``dt = cfl * h^2 / (2 N Lambda Hmax)`` refreshed every 100 steps.
``implicit``
    Linearised backward Euler, ``(I/dt - J) du = R(u)``, with ``dt`` grown
    by the residual ratio as the iteration settles (pseudo-transient
    continuation).  Same fixed point, far fewer steps on fine grids.

Both start from :func:`supersolution_init` and stop when the projected
residual ``max |R|`` (with ``R <= 0`` allowed where ``u = 0``) drops to ``tol``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _stencil
from .grid import Grid, ScalarField
from .operators import DegeneracyParams, OperatorKind
from .reaction import ReactionParams, bump_prime_max

__all__ = [
    "ProblemSpec",
    "SolveConfig",
    "SolveResult",
    "SolverError",
    "ResolutionError",
    "supersolution_init",
    "solve_peps",
    "residual",
    "comparison_check",
    "cutting_check",
    "eps_sweep",
    "SweepEntry",
    "SweepResult",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Non-convergence or a non-finite iterate."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = list(trace or [])


class ResolutionError(ValueError):
    """``eps`` is too small for the grid to resolve the transition layer."""


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the singularly perturbed problem on a rectangle.

    ``g`` is read on the Dirichlet faces only.  Axes in ``reflect_axes`` get
    mirrored (zero-flux) faces instead of Dirichlet data.
    """

    grid: Grid
    deg: DegeneracyParams
    op: OperatorKind
    reaction: ReactionParams
    g: ScalarField
    reflect_axes: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "reflect_axes", tuple(int(k) for k in self.reflect_axes))
        errs = self.check()
        if errs:
            raise ValueError("; ".join(errs))

    def check(self) -> list[str]:
        errs = []
        if self.g.grid != self.grid:
            errs.append("boundary datum g lives on a different grid")
        for k in self.reflect_axes:
            if not 0 <= k < self.grid.dim:
                errs.append(f"reflect axis {k} out of range")
        if len(self.reflect_axes) >= self.grid.dim:
            errs.append("at least one axis needs Dirichlet data")
        for name, fld in (("a", self.deg.a), ("Q", self.reaction.Q), ("f", self.reaction.f)):
            if isinstance(fld, ScalarField) and fld.grid != self.grid:
                errs.append(f"{name} lives on a different grid")
        if not errs and float(self.g.values[self.dirichlet_mask()].min()) < 0:
            errs.append("boundary datum must satisfy g >= 0")
        return errs

    def dirichlet_mask(self) -> np.ndarray:
        m = np.zeros(self.grid.shape, dtype=bool)
        for k in range(self.grid.dim):
            if k in self.reflect_axes:
                continue
            sl = [slice(None)] * self.grid.dim
            sl[k] = 0
            m[tuple(sl)] = True
            sl[k] = -1
            m[tuple(sl)] = True
        return m

    def g_sup(self) -> float:
        return float(self.g.values[self.dirichlet_mask()].max())

    def replace(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)

    def with_eps(self, eps: float) -> "ProblemSpec":
        return replace(self, reaction=self.reaction.with_eps(eps))


@dataclass(frozen=True)
class SolveConfig:
    cfl: float = 0.4
    tol: float = 1e-8
    max_iter: int = 1_000_000
    project_nonneg: bool = True
    scheme: str = "explicit"
    min_layer_nodes: float = 4.0
    refresh: int = 100

    def __post_init__(self):
        errs = self.check()
        if errs:
            raise ValueError("; ".join(errs))

    def check(self) -> list[str]:
        errs = []
        if not 0 < self.cfl < 1:
            errs.append(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.tol > 0:
            errs.append("tol must be positive")
        if self.max_iter < 1:
            errs.append("max_iter must be at least 1")
        if self.scheme not in ("explicit", "implicit"):
            errs.append(f"scheme must be 'explicit' or 'implicit', got {self.scheme!r}")
        if not self.min_layer_nodes > 0:
            errs.append("min_layer_nodes must be positive")
        return errs

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SolveResult:
    u: ScalarField
    iterations: int
    final_residual: float
    monotone_violations: int
    scheme: str = "explicit"
    init_iterations: int = 0
    trace: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "iterations": int(self.iterations),
            "init_iterations": int(self.init_iterations),
            "final_residual": float(self.final_residual),
            "monotone_violations": int(self.monotone_violations),
            "scheme": self.scheme,
            "u_sup": self.u.sup(),
            "u_inf": self.u.inf(),
        }


def _projected(R, u_free, project):
    r = R.copy()
    if project:
        r[(u_free <= 0.0) & (r < 0.0)] = 0.0
    return r


def residual(spec: ProblemSpec, u: ScalarField, project: bool = True) -> float:
    """Projected sup-residual of ``u`` on the unknown nodes."""
    st = _stencil.Stencil(spec)
    if st.n_free == 0:
        return 0.0
    uf = u.values.ravel()
    R = st.residual(uf)
    return float(np.abs(_projected(R, uf[st.free_flat], project)).max())


def _bad_node(spec, flat_index):
    node = np.unravel_index(int(flat_index), spec.grid.shape)
    x = spec.grid.node_coord(node)
    return tuple(int(i) for i in node), tuple(float(v) for v in x)


def _stiffness_cap(spec: ProblemSpec, cfg: SolveConfig) -> float:
    grid, op = spec.grid, spec.op
    base = 1e6 * cfg.cfl * grid.hmin**2 / (2 * grid.dim * op.upper)
    qmax = float(np.max(spec.reaction.Q_values(grid)))
    if qmax > 0:
        stiff = cfg.cfl * spec.reaction.eps**2 / (qmax * bump_prime_max())
        return min(base, stiff)
    return base


def _run_explicit(spec: ProblemSpec, cfg: SolveConfig, u0: np.ndarray):
    st = _stencil.Stencil(spec)
    u = np.ascontiguousarray(u0.ravel().astype(float))
    if st.n_free == 0:
        return u, 0, 0.0, 0, ()
    args = st.kernel_args()
    it, res, viol, status, bad = _stencil.explicit_loop(
        u, *args, cfg.cfl, spec.grid.hmin, spec.op.upper, st.a_sup, _stiffness_cap(spec, cfg),
        cfg.tol, int(cfg.max_iter), bool(cfg.project_nonneg), int(cfg.refresh))
    trace = ((int(it), float(res)),)
    if status == 2:
        node, x = _bad_node(spec, bad)
        raise SolverError(f"non-finite residual at node {node} (x={x}) after {it} iterations", trace)
    if status == 1:
        raise SolverError(f"explicit pseudo-time did not reach tol={cfg.tol} in {cfg.max_iter} "
                          f"iterations (residual {res:.3e})", trace)
    return u, int(it), float(res), int(viol), trace


def _run_implicit(spec: ProblemSpec, cfg: SolveConfig, u0: np.ndarray):
    st = _stencil.Stencil(spec)
    u = u0.ravel().astype(float).copy()
    if st.n_free == 0:
        return u, 0, 0.0, 0, ()
    free = st.free_flat
    project = cfg.project_nonneg
    R, J = st.jacobian(u)
    r = float(np.abs(_projected(R, u[free], project)).max())
    hmax = float(np.max(spec.deg.h_of_norm(st.hnorm(u), st.a)))
    dt = cfg.cfl * spec.grid.hmin**2 / (2 * spec.grid.dim * spec.op.upper * max(hmax, 1.0))
    trace = [(0, r, dt)]
    sup_prev = float(u[free].max())
    viol = 0
    it = 0
    eye = sp.identity(st.n_free, format="csr")
    while r > cfg.tol:
        if it >= cfg.max_iter:
            raise SolverError(f"implicit pseudo-time did not reach tol={cfg.tol} in {cfg.max_iter} steps "
                              f"(residual {r:.3e})", trace)
        rhs = R.copy()
        A = eye / dt - J
        if project:
            # Nodes resting on the floor with a downward push stay put.
            active = (u[free] <= 0.0) & (R <= 0.0)
            if active.any():
                keep = sp.diags((~active).astype(float))
                A = keep @ A + sp.diags(active.astype(float))
                rhs[active] = 0.0
        with warnings.catch_warnings():
            # A singular step shows up as non-finite entries and is retried.
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            du = spla.spsolve(A.tocsc(), rhs)
        trial = u.copy()
        trial[free] += du
        if project:
            np.maximum(trial, 0.0, out=trial)
        if not np.all(np.isfinite(trial)):
            dt *= 0.25
            if dt < 1e-300:
                bad = free[np.flatnonzero(~np.isfinite(trial[free]))[0]]
                node, x = _bad_node(spec, bad)
                raise SolverError(f"non-finite iterate at node {node} (x={x})", trace)
            continue
        R_new, J_new = st.jacobian(trial)
        r_new = float(np.abs(_projected(R_new, trial[free], project)).max())
        if not np.isfinite(r_new):
            bad = free[np.flatnonzero(~np.isfinite(R_new))[0]]
            node, x = _bad_node(spec, bad)
            raise SolverError(f"non-finite residual at node {node} (x={x})", trace)
        if r_new > 2.0 * r and r_new > cfg.tol:
            dt *= 0.25
            trace.append((it, r_new, -dt))
            continue
        dt = min(dt * min(max(1.5 * r / max(r_new, 1e-300), 0.25), 4.0), 1e6)
        u, R, J, r = trial, R_new, J_new, r_new
        it += 1
        sup_new = float(u[free].max())
        if sup_new > sup_prev + 1e-12:
            viol += 1
        sup_prev = sup_new
        trace.append((it, r, dt))
        if it % 50 == 0:
            log.debug("implicit step %d residual %.3e dt %.3e", it, r, dt)
    return u, it, r, viol, tuple(trace)


def _run(spec, cfg, u0):
    if cfg.scheme == "implicit":
        return _run_implicit(spec, cfg, u0)
    return _run_explicit(spec, cfg, u0)


def _start_state(spec: ProblemSpec) -> np.ndarray:
    """``sup g`` inside, ``g`` on Dirichlet faces: a supersolution whenever zeta >= 0."""
    u = np.full(spec.grid.shape, spec.g_sup())
    d = spec.dirichlet_mask()
    u[d] = spec.g.values[d]
    return u


def _init_problem(spec: ProblemSpec) -> ProblemSpec:
    r = spec.reaction
    return spec.replace(reaction=ReactionParams(r.eps, 0.0, r.B0))


def _supersolution_init(spec: ProblemSpec, cfg: SolveConfig):
    sub = _init_problem(spec)
    u, it, res, viol, trace = _run(sub, cfg, _start_state(spec))
    return u, it


def supersolution_init(spec: ProblemSpec, cfg: SolveConfig | None = None) -> ScalarField:
    """Solve ``H F(D^2 w) = inf zeta_eps`` with ``w = g``, starting from ``sup g``.

    Since ``zeta_eps >= inf zeta_eps``, the result dominates the discrete
    solution of the full problem and is the starting point of the descent.
    """
    cfg = cfg or SolveConfig()
    u, _ = _supersolution_init(spec, cfg)
    return ScalarField(spec.grid, u)


def _check_resolution(spec: ProblemSpec, cfg: SolveConfig):
    if spec.reaction.is_zero or float(np.max(spec.reaction.Q_values(spec.grid))) == 0.0:
        return
    need = cfg.min_layer_nodes * spec.grid.hmin
    if spec.reaction.eps < need * (1 - 1e-12):
        raise ResolutionError(
            f"eps={spec.reaction.eps} is below {cfg.min_layer_nodes:g}*h={need:.6g}: "
            "the transition layer is not resolvable on this grid")


def solve_peps(spec: ProblemSpec, cfg: SolveConfig | None = None, u0: ScalarField | None = None) -> SolveResult:
    """Pseudo-time descent to the discrete steady state.

    Starts from :func:`supersolution_init` unless a warm start ``u0`` is given
    (its Dirichlet values are overwritten by ``g``).
    """
    cfg = cfg or SolveConfig()
    _check_resolution(spec, cfg)
    init_it = 0
    if u0 is None:
        start, init_it = _supersolution_init(spec, cfg)
    else:
        start = np.array(u0.values, dtype=float)
        d = spec.dirichlet_mask()
        start[d] = spec.g.values[d]
        if cfg.project_nonneg:
            np.maximum(start, 0.0, out=start)
    u, it, res, viol, trace = _run(spec, cfg, start)
    log.info("solve eps=%g scheme=%s: %d steps, residual %.3e", spec.reaction.eps, cfg.scheme, it, res)
    return SolveResult(ScalarField(spec.grid, u.reshape(spec.grid.shape)), it, res, viol,
                       cfg.scheme, init_it, trace)


def comparison_check(spec: ProblemSpec, sub: ScalarField, sup: ScalarField, tol: float = 1e-8):
    """``sub <= sup + tol`` everywhere; returns ``(passed, worst_node, worst_excess)``."""
    diff = sub.values - sup.values
    k = int(np.argmax(diff))
    node = tuple(int(i) for i in np.unravel_index(k, spec.grid.shape))
    worst = float(diff.ravel()[k])
    return worst <= tol, node, worst


@dataclass
class CuttingReport:
    passed: bool
    sup_difference: float
    degenerate: SolveResult
    pure: SolveResult

    def to_dict(self) -> dict:
        return {"passed": self.passed, "sup_difference": self.sup_difference,
                "degenerate": self.degenerate.to_dict(), "pure": self.pure.to_dict()}


def cutting_check(spec: ProblemSpec, cfg: SolveConfig | None = None) -> CuttingReport:
    """Solve ``H F = 0`` and ``F = 0`` with the same data and compare."""
    cfg = cfg or SolveConfig()
    if not spec.reaction.is_zero:
        raise ValueError("cutting_check needs a vanishing reaction (Q = 0, f = 0)")
    degenerate = solve_peps(spec, cfg)
    pure = solve_peps(spec.replace(deg=DegeneracyParams.unit()), cfg)
    diff = float(np.abs(degenerate.u.values - pure.u.values).max())
    return CuttingReport(diff <= 10 * cfg.tol, diff, degenerate, pure)


@dataclass
class SweepEntry:
    eps: float
    result: SolveResult
    report: object

    def to_dict(self) -> dict:
        return {"eps": self.eps, "result": self.result.to_dict(), "geometry": self.report.to_dict()}


@dataclass
class SweepResult:
    entries: list
    successive_differences: list
    hausdorff_distances: list
    c1: float

    def to_dict(self) -> dict:
        return {
            "eps": [e.eps for e in self.entries],
            "entries": [e.to_dict() for e in self.entries],
            "successive_differences": self.successive_differences,
            "hausdorff_distances": self.hausdorff_distances,
            "c1": self.c1,
        }


def eps_sweep(spec: ProblemSpec, cfg: SolveConfig | None = None, eps_list=(), geometry=None,
              c1: float = 1.5) -> SweepResult:
    """Solve for each ``eps`` (descending), warm-starting from the previous solution.

    ``geometry`` is a :class:`~degenfb.geometry.GeometryConfig`; the default
    config is used when omitted.
    """
    from .geometry import GeometryConfig, hausdorff_distance, measure

    cfg = cfg or SolveConfig()
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("eps_list is empty")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be descending")
    for e in eps_list:
        _check_resolution(spec.with_eps(e), cfg)
    geometry = geometry or GeometryConfig()
    entries = []
    prev = None
    for e in eps_list:
        sp_e = spec.with_eps(e)
        res = solve_peps(sp_e, cfg, u0=prev.u if prev is not None else None)
        rep = measure(res.u, e, geometry)
        entries.append(SweepEntry(e, res, rep))
        prev = res
    diffs, hds = [], []
    for a, b in zip(entries, entries[1:]):
        diffs.append(float(np.abs(a.result.u.values - b.result.u.values).max()))
        ma = a.result.u.values > c1 * a.eps
        mb = b.result.u.values > c1 * b.eps
        hds.append(hausdorff_distance(spec.grid, ma, mb) if ma.any() and mb.any() else None)
    return SweepResult(entries, diffs, hds, c1)
