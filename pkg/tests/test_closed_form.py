import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bubblelab.closed_form import (
    BewleySpec,
    bewley_growth_consumption,
    log_olg_rule,
    solve_bewley_growth,
    solve_bewley_money,
    solve_log_olg,
    solve_wilson,
    transversality_terms,
)
from bubblelab.core import CRRAPeriodUtility, DomainError, RegimeError, TrendedPath, Verdict

T = 400


def geometric(level, growth):
    return TrendedPath.geometric(level, growth, T)


def test_log_olg_price_is_beta_times_endowment():
    sol = solve_log_olg(geometric(2.0, 1.02), geometric(0.1, 1.01), 0.4)
    np.testing.assert_array_equal(sol.prices.levels, 0.4 * sol.young.levels / 0.6)
    assert sol.prices[10] == 0.4 * 2.0 * 1.02 ** 10
    assert sol.verdict.classification is Verdict.BUBBLY
    assert sol.euler_residuals().max() <= 1e-12


def test_log_olg_constant_endowment_is_fundamental():
    sol = solve_log_olg(np.ones(T + 1), np.full(T + 1, 0.1), 0.5)
    assert sol.verdict.classification is Verdict.FUNDAMENTAL
    assert not log_olg_rule(1.0, 1.0)


def test_log_olg_rejects_zero_dividends():
    with pytest.raises(DomainError):
        solve_log_olg(np.ones(10), np.zeros(10), 0.5)


def test_wilson_example():
    sol = solve_wilson(1.0, 0.0, 1.5, 1.0, 1.2, 0.9)
    np.testing.assert_array_equal(sol.prices.levels, 1.0)
    assert sol.prices.growth == 1.5
    assert sol.no_arbitrage_residuals().max() <= 1e-12
    assert sol.verdict.classification is Verdict.BUBBLY
    assert sol.rates[0] == pytest.approx(1.5 + 1.2)
    assert np.all(np.diff(sol.rates) <= 0)


@pytest.mark.parametrize("Gd,G,beta", [(1.05, 1.5, 0.9), (1.2, 1.1, 0.9), (1.2, 1.5, 0.5)])
def test_wilson_outside_regime(Gd, G, beta):
    with pytest.raises(RegimeError):
        solve_wilson(1.0, 0.0, G, 1.0, Gd, beta)


def test_bewley_money_log_utility_hand_value():
    a, b, beta = 2.0, 1.0, 0.9
    sol = solve_bewley_money(a, b, beta, CRRAPeriodUtility(1.0))
    assert sol.P == pytest.approx((beta * a - b) / (1 + beta), abs=1e-12)
    assert sol.euler_rich_residual <= 1e-12
    assert sol.euler_poor_slack >= 0


def test_bewley_money_crra_frozen():
    sol = solve_bewley_money(2.0, 1.0, 0.9, CRRAPeriodUtility(2.0))
    assert sol.P == pytest.approx(0.46049894151541404, rel=1e-13)


def test_bewley_money_autarky():
    with pytest.raises(RegimeError):
        solve_bewley_money(1.1, 1.0, 0.5, CRRAPeriodUtility(1.0))


def test_bewley_growth_frozen_example():
    spec = BewleySpec(0.96, 2.0, 1.02, 1.0, 0.5, 0.005)
    sol = solve_bewley_growth(spec)
    assert sol.p == pytest.approx(0.2386337537059633, rel=1e-13)
    assert sol.euler_rich_residual <= 1e-12
    assert sol.euler_poor_slack >= 0
    assert sol.contraction == pytest.approx(0.96 / 1.02)
    assert sol.verdict.classification is Verdict.BUBBLY
    assert all(sol.flags.values())


def test_bewley_growth_log_utility_matches_money_economy_limit():
    # gamma = 1: beta G^0 = beta, so p = (beta a - b)/(1 + beta)
    spec = BewleySpec(0.9, 1.0, 1.05, 2.0, 1.0, 0.01)
    sol = solve_bewley_growth(spec)
    assert sol.p == pytest.approx((0.9 * 2 - 1) / 1.9, abs=1e-12)


def test_bewley_growth_rejects_linear_utility():
    with pytest.raises(DomainError):
        BewleySpec(0.9, 0.0, 1.05, 2.0, 1.0, 0.01)


def test_bewley_growth_flag_violations_named():
    with pytest.raises(RegimeError, match="flag_D_small"):
        solve_bewley_growth(BewleySpec(0.9, 1.0, 1.05, 2.0, 1.0, 1.0))
    with pytest.raises(RegimeError, match="flag_tvc"):
        solve_bewley_growth(BewleySpec(0.99, 0.5, 1.05, 2.0, 1.0, 0.01))


def test_bewley_growth_consumption_and_transversality():
    spec = BewleySpec(0.96, 2.0, 1.02, 1.0, 0.5, 0.005)
    sol = solve_bewley_growth(spec)
    rich_c, poor_c, rich_e, poor_e = bewley_growth_consumption(spec, sol.p, 50)
    assert np.all(poor_e > 0)
    np.testing.assert_allclose(rich_c + poor_c, spec.a + spec.b)
    terms = transversality_terms(spec, sol)
    assert terms[-1] < 1e-6 * terms[0]


@settings(max_examples=50, deadline=None)
@given(st.floats(0.9, 1.1), st.floats(0.9, 1.1), st.floats(0.1, 0.9))
def test_log_olg_rule_matches_detector_off_the_band(Ga, Gd, beta):
    assume(abs(Gd / Ga - 1) > 0.01)
    sol = solve_log_olg(geometric(1.0, Ga), geometric(0.1, Gd), beta)
    expected = Verdict.BUBBLY if log_olg_rule(Ga, Gd) else Verdict.FUNDAMENTAL
    assert sol.verdict.classification is expected


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 5.0), st.floats(0.05, 1.0), st.floats(0.5, 0.99), st.floats(0.3, 4.0))
def test_bewley_money_root_solves_rich_euler(a, b, beta, gamma):
    u = CRRAPeriodUtility(gamma)
    assume(u.du(a) < beta * u.du(b) * (1 - 1e-6))
    sol = solve_bewley_money(a, b, beta, u)
    assert 0 < sol.P < a
    assert sol.euler_rich_residual <= 1e-10
    assert sol.euler_poor_slack >= 0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.8, 0.99), st.floats(0.5, 4.0), st.floats(1.001, 1.1))
def test_bewley_growth_formula_solves_euler(beta, gamma, G):
    spec = BewleySpec(beta, gamma, G, 1.0, 0.2, 0.001 * (G - 1))
    assume(all(spec.flags().values()))
    sol = solve_bewley_growth(spec, horizon=50)
    assert sol.euler_rich_residual <= 1e-12
    assert sol.euler_poor_slack >= -1e-15
