import itertools

import numpy as np
import pytest
from scipy import optimize

from degenfb.oned import SlopeLaw, cross_validate, integrate_profile, law_residual, slope_from_law
from degenfb.reaction import ReactionParams, bump_antiderivative


def test_closed_forms():
    assert slope_from_law(SlopeLaw(0, 0, 0, 1)) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert slope_from_law(SlopeLaw(1, 1, 0, 1)) == pytest.approx(3 ** (1 / 3), abs=1e-12)


def test_mixed_law_root():
    s = slope_from_law(SlopeLaw(1, 2, 1, 1))
    ref = optimize.brentq(lambda t: t**3 / 3 + t**4 / 4 - 1, 0.5, 2, xtol=1e-15)
    assert s == pytest.approx(ref, abs=1e-12)
    assert round(s, 3) == 1.169
    assert abs(law_residual(SlopeLaw(1, 2, 1, 1), s)) < 1e-11


@pytest.mark.parametrize("p,I", list(itertools.product([0.5, 1.0, 2.0, 3.0], [0.1, 1.0, 4.0])))
def test_kappa_zero_closed_form(p, I):
    assert slope_from_law(SlopeLaw(p, p, 0.0, I)) == pytest.approx(((p + 2) * I) ** (1 / (p + 2)), rel=1e-11)


def test_monotone_in_I_and_kappa():
    for p, q in [(0.5, 1.0), (1.0, 2.0), (2.0, 2.0)]:
        s_I = [slope_from_law(SlopeLaw(p, q, 1.0, I)) for I in (0.1, 0.5, 1.0, 2.0)]
        s_k = [slope_from_law(SlopeLaw(p, q, k, 1.0)) for k in (0.0, 0.5, 1.0, 4.0)]
        assert np.all(np.diff(s_I) > 0) and np.all(np.diff(s_k) < 0)


def test_zero_flux_law():
    assert slope_from_law(SlopeLaw(1, 2, 1, 0.0)) == 0.0
    with pytest.raises(ValueError):
        SlopeLaw(2, 1)


@pytest.mark.parametrize("p,q,kappa", [(1, 1, 0), (1, 2, 1), (0.5, 2, 0.3)])
def test_profile_reproduces_law(p, q, kappa):
    prof = integrate_profile(p, q, kappa, ReactionParams(0.01))
    assert prof.slope == pytest.approx(slope_from_law(SlopeLaw(p, q, kappa, 1)), abs=1e-10)
    assert prof.identity_residual <= 1e-10
    assert np.all(np.diff(prof.x) > 0) and prof.x[-1] == 0.0


def test_profile_midlayer_slope():
    prof = integrate_profile(1, 2, 1, ReactionParams(0.01), samples=3)
    t = prof.u[1] / 0.01
    half = slope_from_law(SlopeLaw(1, 2, 1, bump_antiderivative(t)))
    assert prof.s[1] == pytest.approx(half, abs=1e-10)
    assert prof.s[1] < prof.slope


def test_profile_separable_oracle():
    # Uniform reaction on the layer: Z(t) = t, so s(u) = (3u/eps)^(1/3) for p = 1.
    eps = 0.02
    prof = integrate_profile(1, 1, 0, ReactionParams(eps), antiderivative=lambda t: min(max(t, 0.0), 1.0))
    u = prof.u
    x_ref = -(eps / 3) ** (1 / 3) * 1.5 * (eps ** (2 / 3) - u ** (2 / 3))
    np.testing.assert_allclose(prof.x, x_ref, atol=1e-10)


def test_profile_guards():
    with pytest.raises(ValueError):
        integrate_profile(0.0, 1, 0, ReactionParams(0.01))
    with pytest.raises(ValueError):
        integrate_profile(1, 1, 0, ReactionParams(0.01, 2.0))


def test_cross_validate_and_refinement():
    eps = 1e-2
    a = cross_validate(1, 1, 0, eps, eps / 8)
    b = cross_validate(1, 1, 0, eps, eps / 16)
    assert a.discrepancy <= 0.05
    assert b.discrepancy <= a.discrepancy


def test_cross_validate_without_reaction():
    cv = cross_validate(1, 1, 0, 1e-2, 1e-2 / 8, Q=0.0)
    assert cv.discrepancy <= 1e-8
