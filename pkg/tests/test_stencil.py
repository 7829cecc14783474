import numpy as np
import pytest

from degenfb import _stencil
from degenfb.grid import Grid, ScalarField
from degenfb.operators import DegeneracyParams, HessianFm, Laplacian, PucciMinus
from degenfb.reaction import ReactionParams
from degenfb.solver import ProblemSpec


def make(op, reflect=(), Q=1.0, n=9):
    grid = Grid.unit(n)
    g = ScalarField.from_function(grid, lambda x, y: 1.0 - x)
    spec = ProblemSpec(grid, DegeneracyParams(1.0, 2.0, 1.0), op, ReactionParams(0.3, Q, 0.0), g, reflect)
    return _stencil.Stencil(spec), grid


@pytest.mark.parametrize("op", [Laplacian(), PucciMinus(1.0, 2.0), HessianFm(3)])
@pytest.mark.parametrize("reflect", [(), (1,)])
def test_jacobian_matches_finite_differences(rng, op, reflect):
    st, grid = make(op, reflect)
    u = rng.random(grid.size) + 0.1
    _, J = st.jacobian(u)
    J = J.toarray()
    D = np.zeros_like(J)
    e = 1e-7
    for j, node in enumerate(st.free_flat):
        up, dn = u.copy(), u.copy()
        up[node] += e
        dn[node] -= e
        D[:, j] = (st.residual(up) - st.residual(dn)) / (2 * e)
    assert np.abs(D - J).max() <= 1e-7 * np.abs(J).max()


@pytest.mark.parametrize("op", [Laplacian(), PucciMinus(1.0, 2.0), HessianFm(3)])
def test_kernel_matches_vectorised_residual(rng, op):
    st, grid = make(op, (1,))
    u = rng.random(grid.size)
    out, gbuf = np.empty(st.n_free), np.empty(1)
    _stencil.residual_kernel(u, out, gbuf, *st.kernel_args())
    np.testing.assert_allclose(out, st.residual(u), rtol=1e-13, atol=1e-9)


def test_affine_gradient_is_exact():
    st, grid = make(Laplacian(), Q=0.0)
    u = ScalarField.from_function(grid, lambda x, y: 2 * x - 3 * y).values.ravel()
    np.testing.assert_allclose(st.hnorm(u), np.sqrt(13.0), rtol=1e-12)


def test_quadratic_gradient_is_second_order():
    # u = x^2: per axis D0 = 2x and D2 = 2, so |grad|^2 = 4x^2 + h^2.
    st, grid = make(Laplacian(), Q=0.0)
    u = ScalarField.from_function(grid, lambda x, y: x * x).values.ravel()
    x = grid.points()[st.free_flat, 0]
    np.testing.assert_allclose(st.hnorm(u) ** 2, 4 * x * x + grid.h[0] ** 2, rtol=1e-12, atol=1e-12)


def test_isolated_node_keeps_positive_degeneracy():
    # Symmetric neighbours cancel the central difference; the one-sided ones do not.
    st, grid = make(Laplacian(), Q=0.0)
    u = np.zeros(grid.size)
    node = np.ravel_multi_index((4, 4), grid.shape)
    u[node] = 1.0
    k = st.free_pos[node]
    assert st.hnorm(u)[k] > 0
    assert st.residual(u)[k] != 0.0
