import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from bubblelab.core import (
    CES,
    CobbDouglas,
    CRRAPeriodUtility,
    DomainError,
    GrowthEconomy,
    TrendedPath,
    Verdict,
    as_path,
    mrs_ratio,
    utility_eval,
)

pos = st.floats(min_value=1e-3, max_value=1e3)
weight = st.floats(min_value=0.05, max_value=0.95)
elasticity = st.floats(min_value=0.2, max_value=5.0)


def test_cobb_douglas_values():
    k = CobbDouglas(0.5)
    assert k.value(4.0, 1.0) == pytest.approx(2.0)
    assert k.mrs(1.0, 1.029) == pytest.approx(1.029)
    assert k.inada_satisfied


def test_ces_unit_elasticity_matches_cobb_douglas():
    a, b = CES(0.3, 1.0), CobbDouglas(0.3)
    assert a.evaluate(2.0, 3.0) == pytest.approx(b.evaluate(2.0, 3.0))


def test_inada_flag():
    assert CES(0.5, 1.0).inada_satisfied
    assert CES(0.5, 2.0).inada_satisfied
    assert not CES(0.5, 0.5).inada_satisfied


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_kernel_rejects_bad_beta(bad):
    with pytest.raises(DomainError):
        CobbDouglas(bad)


def test_linear_utility_rejected():
    with pytest.raises(DomainError):
        CES(0.5, math.inf)


def test_nonpositive_consumption_rejected():
    with pytest.raises(DomainError):
        CobbDouglas(0.5).evaluate(0.0, 1.0)


@given(weight, elasticity, pos, pos)
def test_derivatives_match_finite_differences(beta, eps, y, z):
    k = CES(beta, eps)
    d = utility_eval(k, y, z)
    hy, hz = 1e-6 * y, 1e-6 * z
    U_y = (k.value(y + hy, z) - k.value(y - hy, z)) / (2 * hy)
    U_z = (k.value(y, z + hz) - k.value(y, z - hz)) / (2 * hz)
    # the difference quotient cannot resolve better than eps |U| / h
    noise = 8 * np.finfo(float).eps * abs(d.U)
    assert d.U_y == pytest.approx(U_y, rel=1e-5, abs=noise / hy)
    assert d.U_z == pytest.approx(U_z, rel=1e-5, abs=noise / hz)
    U_yz = (k.evaluate(y, z + hz).U_y - k.evaluate(y, z - hz).U_y) / (2 * hz)
    # U_y = wy (U/y)^(1/eps) carries roughly (1 + 1/eps) ulps of error
    noise_y = 8 * np.finfo(float).eps * (1 + 1 / eps) * abs(d.U_y)
    assert d.U_yz == pytest.approx(U_yz, rel=1e-4, abs=noise_y / hz)


@settings(max_examples=30, deadline=None)
@given(weight, elasticity, pos, pos)
def test_derivatives_match_high_precision(beta, eps, y, z):
    mp.dps = 50
    s = (mpf(eps) - 1) / mpf(eps)

    def U(a, b):
        if s == 0:
            return a ** (1 - mpf(beta)) * b ** mpf(beta)
        return ((1 - mpf(beta)) * a ** s + mpf(beta) * b ** s) ** (1 / s)

    d = CES(beta, eps).evaluate(y, z)
    Y, Z = mpf(y), mpf(z)
    assert d.U == pytest.approx(float(U(Y, Z)), rel=1e-13)
    assert d.U_y == pytest.approx(float(mp.diff(lambda a: U(a, Z), Y)), rel=1e-12)
    assert d.U_z == pytest.approx(float(mp.diff(lambda b: U(Y, b), Z)), rel=1e-12)
    assert d.U_yy == pytest.approx(float(mp.diff(lambda a: U(a, Z), Y, 2)), rel=1e-11)
    assert d.U_yz == pytest.approx(float(mp.diff(U, (Y, Z), (1, 1))), rel=1e-11)


@given(weight, elasticity, pos, pos)
def test_euler_theorem_for_homogeneous_kernel(beta, eps, y, z):
    d = CES(beta, eps).evaluate(y, z)
    assert d.U_y * y + d.U_z * z == pytest.approx(d.U, rel=1e-10)
    # U_y is homogeneous of degree zero
    assert d.U_yy * y + d.U_yz * z == pytest.approx(0.0, abs=1e-10 * abs(d.U_yz * z))


@given(weight, elasticity, pos, pos, st.floats(min_value=0.1, max_value=10))
def test_mrs_homogeneous_of_degree_zero(beta, eps, y, z, lam):
    k = CES(beta, eps)
    assert mrs_ratio(k, lam * y, lam * z) == pytest.approx(mrs_ratio(k, y, z), rel=1e-12)
    d = k.evaluate(y, z)
    assert d.U_y / d.U_z == pytest.approx(mrs_ratio(k, y, z), rel=1e-12)


def test_crra():
    u = CRRAPeriodUtility(1.0)
    assert u.u(math.e) == pytest.approx(1.0)
    assert u.du(2.0) == pytest.approx(0.5)
    assert u.du(0.0) == math.inf
    assert CRRAPeriodUtility(2.0).d2u(1.0) == pytest.approx(-2.0)
    with pytest.raises(DomainError):
        CRRAPeriodUtility(0.0)


def test_growth_economy_validation():
    e = GrowthEconomy(1.0, 0.98, 1.05, 0.0029, 1.0)
    assert e.w == pytest.approx(0.98)
    with pytest.raises(DomainError):
        GrowthEconomy(1.0, 0.98, 1.05, 0.0029, 1.05)
    with pytest.raises(DomainError):
        GrowthEconomy(1.0, 0.98, 1.05, 0.0, 1.0)


def test_trended_path_roundtrip():
    p = TrendedPath.geometric(2.0, 1.1, 10)
    assert p.horizon == 10
    assert p[3] == pytest.approx(2.0 * 1.1 ** 3)
    np.testing.assert_allclose(p.retrend(1.0).levels, p.values(), rtol=1e-13)
    assert p.truncate(4).horizon == 4
    with pytest.raises(ValueError):
        p.levels[0] = 1.0


def test_trended_path_overflow_is_loud():
    p = TrendedPath.geometric(1.0, 10.0, 400)
    with pytest.raises(FloatingPointError):
        p.values()
    assert np.isfinite(p.log_values()).all()


def test_trended_path_rejects_nonfinite():
    with pytest.raises(DomainError):
        TrendedPath(1.0, [1.0, math.nan])


def test_as_path_and_verdict_strings():
    assert as_path([1.0, 2.0]).growth == 1.0
    assert str(Verdict.BUBBLY) == "Bubbly"


@settings(max_examples=50)
@given(st.floats(min_value=0.5, max_value=2.0), st.floats(min_value=0.5, max_value=2.0))
def test_retrend_preserves_values(g1, g2):
    p = TrendedPath(g1, np.linspace(1.0, 2.0, 30))
    np.testing.assert_allclose(p.retrend(g2).values(), p.values(), rtol=1e-12)
