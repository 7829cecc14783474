import numpy as np
import pytest
from scipy import integrate

from degenfb.grid import Grid, ScalarField
from degenfb.reaction import (CertificationError, ReactionParams, bump, bump_antiderivative, bump_constant, bump_max,
                              bump_prime, certify, zeta_eps)


def test_bump_normalisation():
    raw, _ = integrate.quad(lambda s: np.exp(-1 / (s * (1 - s))), 0, 1, epsabs=1e-15, epsrel=1e-13)
    assert bump_constant() == pytest.approx(1 / raw, rel=1e-12)
    assert bump_constant() == pytest.approx(142.25037577709585, rel=1e-10)
    tot, _ = integrate.quad(bump, 0, 1, epsabs=1e-14)
    assert tot == pytest.approx(1.0, abs=1e-12)


def test_bump_support_and_peak():
    assert bump(-0.5) == 0.0 and bump(1.0) == 0.0 and bump(0.0) == 0.0
    assert bump(0.5) == pytest.approx(bump_constant() * np.exp(-4.0), rel=1e-14)
    assert bump_max() == bump(0.5)


def test_bump_prime_finite_differences():
    t = np.linspace(0.02, 0.98, 97)
    h = 1e-6
    np.testing.assert_allclose(bump_prime(t), (bump(t + h) - bump(t - h)) / (2 * h), rtol=1e-6, atol=1e-8)
    assert np.all(np.isfinite(bump_prime(np.array([1e-300, 1 - 1e-16, 0.0, 1.0]))))


def test_antiderivative():
    assert bump_antiderivative(2.0) == 1.0
    assert bump_antiderivative(-1.0) == 0.0
    # Symmetric about 1/2.
    assert bump_antiderivative(0.5) == pytest.approx(0.5, abs=1e-12)


def test_zeta_eps_examples():
    g = Grid.unit(5)
    r = ReactionParams(0.1, 1.0, ScalarField.constant(g, 0.3))
    assert zeta_eps(r, (1, 1), 0.2) == pytest.approx(0.3)
    r0 = ReactionParams(0.1)
    assert zeta_eps(r0, (1, 1), 0.05) == pytest.approx(bump(0.5) / 0.1)


def test_singular_part_integrates_to_Q():
    r = ReactionParams(0.01, 2.5, 0.0)
    val, _ = integrate.quad(lambda t: float(r.evaluate(2.5, 0.0, t)), 0, 0.02, points=[0.01], epsabs=1e-13)
    assert val == pytest.approx(2.5, rel=1e-10)


def test_certify_constants():
    c = certify(ReactionParams(0.1, 2.0, 0.0), 0.25, 0.75)
    assert c.A == pytest.approx(2 * bump_max())
    assert c.B0 == c.B == 0.0
    t = np.linspace(0.25, 0.75, 100001)
    assert c.I == pytest.approx(2 * bump(t).min(), rel=1e-9)
    f = certify(ReactionParams(0.1, 1.0, 0.3), 0.25, 0.75)
    assert f.B0 == f.B == 0.3


def test_certify_rejects_nonsingular():
    with pytest.raises(CertificationError):
        certify(ReactionParams(0.1, 0.0, 0.0), 0.25, 0.75)
    with pytest.raises(CertificationError):
        certify(ReactionParams(0.1, 1.0, 0.0), 1.0, 2.0)


@pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=0.1, Q=-1.0), dict(eps=0.1, f=-0.2)])
def test_reaction_params_invalid(kw):
    with pytest.raises(ValueError):
        ReactionParams(**kw)


def test_derivative_is_zero_below_zero():
    r = ReactionParams(0.1)
    assert r.derivative(1.0, -0.01) == 0.0
    assert r.evaluate(1.0, 0.0, -1.0) == r.evaluate(1.0, 0.0, 0.0)
