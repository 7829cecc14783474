"""Discrete residual ``H(grad_h u) F(D_h^2 u) - zeta_eps(u)`` on the unknown nodes.

The gradient magnitude inside ``H`` is the root mean square of the one-sided
differences, ``|grad u|^2 ~ sum_k (D+_k u^2 + D-_k u^2) / 2``.  It sees the
centre value, so a node cannot decouple from its neighbours where the central
difference happens to vanish.  It equals ``(D0 u)^2 + h^2 (D2 u)^2 / 4`` per
axis: exact on affine data and second order on smooth data.

Neighbour tables index the flattened field so that 1D/2D grids and mirrored
faces share one code path.  Mirrored (reflecting) faces map the missing
neighbour ``-1`` onto ``+1``, which is a homogeneous Neumann condition.
"""

from __future__ import annotations

import math

import numba
import numpy as np
import scipy.sparse as sp

from .reaction import bump_constant

_SYNTH_H = -1.0


class Stencil:
    """Index tables and per-node coefficients for one problem instance."""

    def __init__(self, spec):
        grid = spec.grid
        self.grid = grid
        self.dim = grid.dim
        self.shape = grid.shape
        self.h = grid.h
        fixed = np.zeros(grid.shape, dtype=bool)
        for k in range(grid.dim):
            if k in spec.reflect_axes:
                continue
            sl = [slice(None)] * grid.dim
            sl[k] = 0
            fixed[tuple(sl)] = True
            sl[k] = -1
            fixed[tuple(sl)] = True
        self.fixed = fixed
        self.free_flat = np.flatnonzero(~fixed.ravel())
        idx = np.unravel_index(self.free_flat, grid.shape)

        def shifted(k, s):
            i = idx[k] + s
            n = grid.n[k]
            i = np.where(i < 0, 1, i)
            i = np.where(i > n - 1, n - 2, i)
            return i

        def flat(*ii):
            return np.ravel_multi_index(ii, grid.shape)

        if grid.dim == 1:
            xp, xm = shifted(0, 1), shifted(0, -1)
            self.nb = np.stack([flat(xp), flat(xm)] + [flat(idx[0])] * 6, axis=1)
        else:
            xp, xm = shifted(0, 1), shifted(0, -1)
            yp, ym = shifted(1, 1), shifted(1, -1)
            self.nb = np.stack(
                [flat(xp, idx[1]), flat(xm, idx[1]), flat(idx[0], yp), flat(idx[0], ym),
                 flat(xp, yp), flat(xp, ym), flat(xm, yp), flat(xm, ym)], axis=1)
        self.nb = np.ascontiguousarray(self.nb.astype(np.int64))
        self.n_free = len(self.free_flat)
        self.free_pos = -np.ones(grid.size, dtype=np.int64)
        self.free_pos[self.free_flat] = np.arange(self.n_free)

        deg, r = spec.deg, spec.reaction
        self.deg = deg
        self.op = spec.op
        self.reaction = r
        self.a = np.ascontiguousarray(deg.a_values(grid).ravel()[self.free_flat], dtype=float)
        self.Q = np.ascontiguousarray(np.broadcast_to(r.Q_values(grid), grid.shape).ravel()[self.free_flat], dtype=float)
        self.f = np.ascontiguousarray(np.broadcast_to(r.f_values(grid), grid.shape).ravel()[self.free_flat], dtype=float)
        self.a_sup = float(self.a.max()) if self.n_free else 0.0

    # --- vectorised evaluation -------------------------------------------------
    def parts(self, u_flat):
        """Gradient, Hessian entries and centre values at the unknown nodes."""
        u = u_flat
        nb = self.nb
        c = u[self.free_flat]
        hx = self.h[0]
        gx = (u[nb[:, 0]] - u[nb[:, 1]]) / (2.0 * hx)
        xx = (u[nb[:, 0]] - 2.0 * c + u[nb[:, 1]]) / hx**2
        if self.dim == 1:
            return c, gx, np.zeros_like(gx), xx, np.zeros_like(xx), np.zeros_like(xx)
        hy = self.h[1]
        gy = (u[nb[:, 2]] - u[nb[:, 3]]) / (2.0 * hy)
        yy = (u[nb[:, 2]] - 2.0 * c + u[nb[:, 3]]) / hy**2
        xy = (u[nb[:, 4]] - u[nb[:, 5]] - u[nb[:, 6]] + u[nb[:, 7]]) / (4.0 * hx * hy)
        return c, gx, gy, xx, xy, yy

    def one_sided(self, u_flat):
        """Forward and backward differences ``(dp, dm)``, each of shape ``(dim, n_free)``."""
        c = u_flat[self.free_flat]
        dp = np.stack([(u_flat[self.nb[:, 2 * k]] - c) / self.h[k] for k in range(self.dim)])
        dm = np.stack([(c - u_flat[self.nb[:, 2 * k + 1]]) / self.h[k] for k in range(self.dim)])
        return dp, dm

    def hnorm(self, u_flat):
        """Gradient magnitude entering ``H``: ``sqrt(sum (dp^2 + dm^2) / 2)``."""
        dp, dm = self.one_sided(u_flat)
        return np.sqrt(0.5 * (dp * dp + dm * dm).sum(axis=0))

    def _sym(self, xx, xy, yy):
        from .grid import SymMatrix

        return SymMatrix(xx, dim=1) if self.dim == 1 else SymMatrix(xx, xy, yy)

    def residual(self, u_flat):
        c, _, _, xx, xy, yy = self.parts(u_flat)
        g = self.hnorm(u_flat)
        H = self.deg.h_of_norm(g, self.a)
        F = self.op(self._sym(xx, xy, yy))
        z = self.reaction.evaluate(self.Q, self.f, c)
        return H * F - z

    def jacobian(self, u_flat):
        """Residual and its sparse Jacobian (unknowns x unknowns)."""
        c, _, _, xx, xy, yy = self.parts(u_flat)
        dp, dm = self.one_sided(u_flat)
        X = self._sym(xx, xy, yy)
        g = np.sqrt(0.5 * (dp * dp + dm * dm).sum(axis=0))
        H = self.deg.h_of_norm(g, self.a)
        F = np.asarray(self.op(X), dtype=float)
        z = self.reaction.evaluate(self.Q, self.f, c)
        R = H * F - z
        dH = self.deg.dh_of_norm(g, self.a)
        # dg/du_+ = dp / (2 g h), dg/du_- = -dm / (2 g h), the centre gets minus their sum.
        safe = np.where(g > 0, g, 1.0)
        wp = np.where(g > 0, dH * F * dp / (2.0 * safe), 0.0)
        wm = np.where(g > 0, -dH * F * dm / (2.0 * safe), 0.0)
        Fxx, Fxy, Fyy = (np.broadcast_to(np.asarray(v, dtype=float), R.shape) for v in self.op.derivative(X))
        dz = self.reaction.derivative(self.Q, c)
        hx = self.h[0]
        nb = self.nb
        rows = np.arange(self.n_free)
        cols, vals = [], []
        wxx = H * Fxx / hx**2
        cols += [nb[:, 0], nb[:, 1]]
        vals += [wp[0] / hx + wxx, wm[0] / hx + wxx]
        diag = -2.0 * wxx - dz - (wp[0] + wm[0]) / hx
        if self.dim == 2:
            hy = self.h[1]
            wyy = H * Fyy / hy**2
            wxy = H * Fxy / (4.0 * hx * hy)
            cols += [nb[:, 2], nb[:, 3], nb[:, 4], nb[:, 5], nb[:, 6], nb[:, 7]]
            vals += [wp[1] / hy + wyy, wm[1] / hy + wyy, wxy, -wxy, -wxy, wxy]
            diag = diag - 2.0 * wyy - (wp[1] + wm[1]) / hy
        cols.append(self.free_flat)
        vals.append(diag)
        col = np.concatenate(cols)
        val = np.concatenate(vals)
        row = np.tile(rows, len(cols))
        pos = self.free_pos[col]
        keep = pos >= 0
        J = sp.csr_matrix((val[keep], (row[keep], pos[keep])), shape=(self.n_free, self.n_free))
        return R, J

    # --- explicit kernel arguments --------------------------------------------
    def kernel_args(self):
        deg = self.deg
        p = _SYNTH_H if deg.synthetic else float(deg.p)
        q = 0.0 if deg.synthetic else float(deg.q)
        op = self.op
        m = float(getattr(op, "m", 1))
        hy = self.h[1] if self.dim == 2 else 1.0
        return (self.nb, self.free_flat, self.dim, self.h[0], hy, p, q, self.a, op.code,
                float(getattr(op, "lam", 1.0)), float(getattr(op, "Lambda", 1.0)), m,
                self.Q, self.f, float(self.reaction.eps), bump_constant())


@numba.njit(cache=True)
def _bump(t, cb):
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return cb * math.exp(-1.0 / (t * (1.0 - t)))


@numba.njit(cache=True)
def _spectral(e, code, lam, Lam, m):
    if code == 1:
        return Lam * e if e > 0 else lam * e
    if code == 2:
        return lam * e if e > 0 else Lam * e
    if code == 3:
        v = 1.0 + e**m
        r = abs(v) ** (1.0 / m)
        if v < 0:
            r = -r
        return r - 1.0
    return e


@numba.njit(cache=True)
def _one_sided_sq(up, c, um, h):
    dp = (up - c) / h
    dm = (c - um) / h
    return 0.5 * (dp * dp + dm * dm)


@numba.njit(cache=True)
def residual_kernel(u, out, gmax_out, nb, free, dim, hx, hy, p, q, a, code, lam, Lam, m, Q, f, eps, cb):
    """Fill ``out`` with the residual at unknown nodes; return max gradient norm."""
    n = free.shape[0]
    gmax = 0.0
    for k in range(n):
        c = u[free[k]]
        up = u[nb[k, 0]]
        um = u[nb[k, 1]]
        g2 = _one_sided_sq(up, c, um, hx)
        xx = (up - 2.0 * c + um) / (hx * hx)
        if dim == 2:
            vp = u[nb[k, 2]]
            vm = u[nb[k, 3]]
            g2 += _one_sided_sq(vp, c, vm, hy)
            yy = (vp - 2.0 * c + vm) / (hy * hy)
            xy = (u[nb[k, 4]] - u[nb[k, 5]] - u[nb[k, 6]] + u[nb[k, 7]]) / (4.0 * hx * hy)
        else:
            yy = 0.0
            xy = 0.0
        g = math.sqrt(g2)
        if g > gmax:
            gmax = g
        if p == -1.0:
            H = 1.0
        else:
            gp = g if p == 1.0 else g**p
            gq = g * g if q == 2.0 else g**q
            H = gp + a[k] * gq
        if code == 0:
            F = xx + yy
        elif dim == 1:
            F = _spectral(xx, code, lam, Lam, m)
        else:
            half = 0.5 * (xx + yy)
            disc = math.hypot(0.5 * (xx - yy), xy)
            F = _spectral(half - disc, code, lam, Lam, m) + _spectral(half + disc, code, lam, Lam, m)
        t = c if c > 0.0 else 0.0
        z = Q[k] / eps * _bump(t / eps, cb) + f[k]
        out[k] = H * F - z
    gmax_out[0] = gmax
    return gmax


@numba.njit(cache=True)
def explicit_loop(u, nb, free, dim, hx, hy, p, q, a, code, lam, Lam, m, Q, f, eps, cb,
                  cfl, hmin, lam_top, a_sup, dt_cap, tol, max_iter, project, refresh):
    """Explicit Euler pseudo-time with projection, run to ``tol`` or ``max_iter``.

    Returns ``(iterations, residual, violations, status, bad_node)`` where
    status is 0 converged, 1 iteration cap, 2 non-finite value.
    """
    n = free.shape[0]
    R = np.empty(n)
    gbuf = np.empty(1)
    new = np.empty(n)
    dt = dt_cap
    sup_prev = -np.inf
    for k in range(n):
        if u[free[k]] > sup_prev:
            sup_prev = u[free[k]]
    violations = 0
    res = np.inf
    it = 0
    while True:
        gmax = residual_kernel(u, R, gbuf, nb, free, dim, hx, hy, p, q, a, code, lam, Lam, m, Q, f, eps, cb)
        res = 0.0
        for k in range(n):
            r = R[k]
            if not math.isfinite(r):
                return it, np.inf, violations, 2, free[k]
            if project and u[free[k]] <= 0.0 and r < 0.0:
                r = 0.0
            r = abs(r)
            if r > res:
                res = r
        if res <= tol:
            return it, res, violations, 0, -1
        if it >= max_iter:
            return it, res, violations, 1, -1
        if it % refresh == 0:
            if p == -1.0:
                Hmax = 1.0
            else:
                Hmax = gmax**p + a_sup * gmax**q
            denom = 2.0 * dim * lam_top * Hmax
            dt = dt_cap
            if denom > 0.0:
                dtd = cfl * hmin * hmin / denom
                if dtd < dt:
                    dt = dtd
        sup_new = -np.inf
        for k in range(n):
            v = u[free[k]] + dt * R[k]
            if project and v < 0.0:
                v = 0.0
            new[k] = v
            if v > sup_new:
                sup_new = v
        for k in range(n):
            u[free[k]] = new[k]
        if sup_new > sup_prev + 1e-12:
            violations += 1
        sup_prev = sup_new
        it += 1
