"""Estimator-style wrappers: hyper-parameters in ``__init__``, data in ``fit``.

``PepsSolver.fit(g)`` solves with the boundary datum ``g`` (its grid sets the
domain) and ``predict`` interpolates the solution.  ``GeometryAnalyzer.fit(u)``
measures a solution.  Both inherit ``get_params``/``set_params`` from
scikit-learn's ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from sklearn.base import BaseEstimator

from ._validation import check_field, check_is_fitted, check_points, check_scalar
from .geometry import GeometryConfig, measure
from .operators import DegeneracyParams, operator_from_dict
from .reaction import ReactionParams
from .solver import ProblemSpec, SolveConfig, solve_peps

__all__ = ["PepsSolver", "GeometryAnalyzer"]


class PepsSolver(BaseEstimator):
    """Solve ``H(x, grad u) F(D^2 u) = zeta_eps(u)`` for a given boundary datum.

    Parameters
    ----------
    p, q, a : float
        Degeneracy exponents and the (constant) modulating coefficient.
    operator : {"laplacian", "pucci_plus", "pucci_minus", "hessian_fm"}
    lam, Lambda : float
        Ellipticity constants of the Pucci operators.
    eps, Q, f : float
        Reaction width, intensity and forcing.
    reflect_axes : tuple of int
        Axes with mirrored faces.
    scheme, cfl, tol, max_iter, min_layer_nodes
        Passed to :class:`~degenfb.solver.SolveConfig`.
    """

    def __init__(self, p=1.0, q=2.0, a=1.0, operator="laplacian", lam=1.0, Lambda=1.0, eps=0.1, Q=1.0, f=0.0,
                 reflect_axes=(), scheme="implicit", cfl=0.4, tol=1e-8, max_iter=1_000_000, min_layer_nodes=4.0):
        self.p = p
        self.q = q
        self.a = a
        self.operator = operator
        self.lam = lam
        self.Lambda = Lambda
        self.eps = eps
        self.Q = Q
        self.f = f
        self.reflect_axes = reflect_axes
        self.scheme = scheme
        self.cfl = cfl
        self.tol = tol
        self.max_iter = max_iter
        self.min_layer_nodes = min_layer_nodes

    def _spec(self, g):
        check_scalar(self.p, "p", lo=0, lo_open=True)
        check_scalar(self.q, "q", lo=self.p)
        check_scalar(self.a, "a", lo=0)
        check_scalar(self.eps, "eps", lo=0, lo_open=True)
        deg = DegeneracyParams(float(self.p), float(self.q), float(self.a))
        op = operator_from_dict({"kind": self.operator, "lambda": self.lam, "Lambda": self.Lambda})
        reaction = ReactionParams(float(self.eps), float(self.Q), float(self.f))
        return ProblemSpec(g.grid, deg, op, reaction, g, tuple(self.reflect_axes))

    def fit(self, X, y=None):
        """Solve with boundary datum ``X`` (a ScalarField)."""
        g = check_field(X, "X")
        cfg = SolveConfig(cfl=self.cfl, tol=self.tol, max_iter=self.max_iter, scheme=self.scheme,
                          min_layer_nodes=self.min_layer_nodes)
        res = solve_peps(self._spec(g), cfg)
        self.grid_ = g.grid
        self.u_ = res.u
        self.n_iter_ = res.iterations
        self.residual_ = res.final_residual
        self.monotone_violations_ = res.monotone_violations
        return self

    def predict(self, X):
        """Linear interpolation of the fitted solution at points ``X``."""
        check_is_fitted(self, "u_")
        pts = check_points(X, self.grid_.dim)
        axes = [self.grid_.axis(k) for k in range(self.grid_.dim)]
        interp = RegularGridInterpolator(axes, self.u_.values, method="linear", bounds_error=True)
        return interp(pts)


class GeometryAnalyzer(BaseEstimator):
    """Measure a solution's layer geometry at a fixed ``eps``."""

    def __init__(self, eps=0.1, margin=8, growth_threshold=10.0, nondeg_radii=(0.1, 0.2), density_rho=0.1,
                 n_centers=200, seed=0, c1=1.5):
        self.eps = eps
        self.margin = margin
        self.growth_threshold = growth_threshold
        self.nondeg_radii = nondeg_radii
        self.density_rho = density_rho
        self.n_centers = n_centers
        self.seed = seed
        self.c1 = c1

    def fit(self, X, y=None):
        u = check_field(X, "X")
        check_scalar(self.eps, "eps", lo=0, lo_open=True)
        cfg = GeometryConfig(margin=check_scalar(self.margin, "margin", lo=1, integer=True),
                             growth_threshold=self.growth_threshold, nondeg_radii=tuple(self.nondeg_radii),
                             density_rho=self.density_rho, n_centers=self.n_centers, seed=self.seed, c1=self.c1)
        self.report_ = measure(u, float(self.eps), cfg)
        return self

    def transform(self, X):
        """Vector of the eps-stable scalars for ``X``."""
        self.fit(X)
        return np.array(list(self.report_.scalars().values()))
