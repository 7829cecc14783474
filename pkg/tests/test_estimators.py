import numpy as np
import pytest
from sklearn.base import clone

from degenfb._validation import check_points, check_scalar
from degenfb.estimators import GeometryAnalyzer, PepsSolver
from degenfb.grid import Grid, ScalarField


def test_params_roundtrip():
    est = PepsSolver(p=2.0, q=3.0, eps=0.2)
    assert est.get_params()["q"] == 3.0
    c = clone(est).set_params(eps=0.3)
    assert c.eps == 0.3 and est.eps == 0.2


def test_fit_predict_linear():
    grid = Grid.unit(17)
    g = ScalarField.from_function(grid, lambda x, y: x)
    est = PepsSolver(Q=0.0, eps=0.5).fit(g)
    assert est.residual_ <= 1e-8
    pts = np.array([[0.3, 0.2], [0.71, 0.9]])
    np.testing.assert_allclose(est.predict(pts), pts[:, 0], atol=1e-8)


def test_predict_before_fit_and_bad_input():
    with pytest.raises(RuntimeError, match="not fitted"):
        PepsSolver().predict([[0.1, 0.1]])
    with pytest.raises(TypeError):
        PepsSolver().fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        PepsSolver(p=-1.0).fit(ScalarField.constant(Grid.unit(9), 1.0))


def test_geometry_analyzer():
    grid = Grid.unit(65)
    u = ScalarField.from_function(grid, lambda x, y: np.maximum(x - 0.3, 0.0))
    v = GeometryAnalyzer(eps=0.02, margin=2, growth_threshold=2.0, n_centers=10).transform(u)
    assert v.ndim == 1 and np.all(np.isfinite(v))


def test_validation_helpers():
    assert check_scalar(3, "n", lo=1, integer=True) == 3
    with pytest.raises(ValueError):
        check_scalar(0.0, "x", lo=0, lo_open=True)
    with pytest.raises(ValueError):
        check_points(np.zeros((2, 3)), 2)
