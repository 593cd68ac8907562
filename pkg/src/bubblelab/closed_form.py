"""Exactly solvable economies: log-utility OLG, linear-utility OLG, two-agent Bewley."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import find_root
from .core import (
    BubbleVerdict,
    CRRAPeriodUtility,
    DomainError,
    RegimeError,
    TrendedPath,
    as_path,
)
from .pricing import DEFAULT_MARGIN, detect_bubble, implied_rates


@dataclass(frozen=True)
class LogOLGSolution:
    prices: TrendedPath
    dividends: TrendedPath
    young: TrendedPath
    old: TrendedPath
    verdict: BubbleVerdict
    beta: float

    def euler_residuals(self) -> np.ndarray:
        """Relative gap in U_y P_t = U_z (P_{t+1} + D_{t+1}) for y^(1-beta) z^beta."""
        y = self.young.values()[:-1]
        z = self.old.values()[1:]
        P = self.prices.values()
        D = self.dividends.values()
        mrs = (1 - self.beta) / self.beta * z / y
        return np.abs(mrs * P[:-1] / (P[1:] + D[1:]) - 1)


def solve_log_olg(endowments, dividends, beta: float,
                  margin: float = DEFAULT_MARGIN) -> LogOLGSolution:
    """Unique equilibrium of the OLG economy with log utility and no old-age endowment.

    Young consumption is (1 - beta) a_t, so the asset price is beta * a_t.
    ``endowments`` and ``dividends`` may be arrays or TrendedPath objects of
    equal horizon.
    """
    if not 0 < beta < 1:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    a = as_path(endowments)
    D = as_path(dividends)
    if a.horizon != D.horizon:
        raise DomainError("endowment and dividend horizons differ")
    if np.any(a.levels <= 0):
        raise DomainError("young endowments must be positive")
    if np.any(D.levels < 0):
        raise DomainError("dividends must be non-negative")
    if not np.any(D.levels[1:] > 0):
        raise DomainError("dividends are identically zero")
    prices = TrendedPath(a.growth, beta * a.levels)
    young = TrendedPath(a.growth, (1 - beta) * a.levels)
    old = TrendedPath.from_values(prices.values() + D.values())
    verdict = detect_bubble(prices, D, margin)
    return LogOLGSolution(prices, D, young, old, verdict, beta)


def log_olg_rule(endowment_growth: float, dividend_growth: float) -> bool:
    """Closed-form bubble condition for geometric a_t and D_t: sum D_t/a_t < inf."""
    return dividend_growth < endowment_growth


@dataclass(frozen=True)
class WilsonSolution:
    prices: TrendedPath
    dividends: TrendedPath
    rates: np.ndarray
    young: np.ndarray
    verdict: BubbleVerdict

    def no_arbitrage_residuals(self) -> np.ndarray:
        """|P_t R_t - (P_{t+1} + D_{t+1})| / P_t."""
        return np.abs(self.rates - implied_rates(self.prices, self.dividends))


def solve_wilson(a: float, b: float, G: float, D: float, Gd: float, beta: float,
                 horizon: int = 400, margin: float = DEFAULT_MARGIN) -> WilsonSolution:
    """Linear-utility OLG with 1/beta < Gd < G: the young save everything, P_t = a G^t.

    Rates are R_t = G + (D/a) Gd (Gd/G)^t; prices are stored detrended by G
    and every no-arbitrage residual is in detrended units.
    """
    if not 0 < beta < 1:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    if not (a > 0 and b >= 0 and D > 0):
        raise DomainError("need a > 0, b >= 0, D > 0")
    if not 1 / beta < Gd < G:
        raise RegimeError(
            f"outside the 1/beta < Gd < G regime: 1/beta={1 / beta:.6g}, Gd={Gd!r}, G={G!r}")
    t = np.arange(horizon + 1)
    prices = TrendedPath(G, np.full(horizon + 1, float(a)))
    dividends = TrendedPath(Gd, np.full(horizon + 1, float(D)))
    rates = G + (D / a) * Gd * (Gd / G) ** t[:-1]
    verdict = detect_bubble(prices, dividends, margin)
    return WilsonSolution(prices, dividends, rates, np.zeros(horizon + 1), verdict)


@dataclass(frozen=True)
class BewleyMoney:
    P: float
    rich: tuple
    poor: tuple
    euler_rich_residual: float
    euler_poor_slack: float


def solve_bewley_money(a: float, b: float, beta: float, u: CRRAPeriodUtility) -> BewleyMoney:
    """Constant money price in the alternating-endowment economy.

    P is the unique root of beta u'(b + P) - u'(a - P) on (0, a). The rich
    agent's Euler equation holds with equality; the poor agent's holds as an
    inequality because the short-sale constraint binds.
    """
    if not (a > b >= 0):
        raise DomainError("need a > b >= 0")
    if not 0 < beta < 1:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    if not u.du(a) < beta * u.du(b):
        raise RegimeError("autarky is an equilibrium candidate: u'(a) >= beta u'(b)")

    def g(P):
        return beta * u.du(b + P) - u.du(a - P)

    eps = 1e-12 * a
    P = find_root(g, eps, a - eps)
    rich = u.du(a - P)
    rich_residual = abs(rich - beta * u.du(b + P)) / rich
    poor_slack = u.du(b + P) - beta * u.du(a - P)
    return BewleyMoney(P, (a - P, b + P), (b + P, a - P), rich_residual, poor_slack)


@dataclass(frozen=True)
class BewleySpec:
    beta: float
    gamma: float
    G: float
    a: float
    b: float
    D: float

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not self.gamma > 0:
            # the growth economy has no linear-utility limit here
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")
        if not (self.a > self.b > 0 and self.D > 0 and self.G > 1):
            raise DomainError("need a > b > 0, D > 0, G > 1")

    @property
    def contraction(self) -> float:
        """beta G^(1 - gamma), the per-period transversality factor."""
        return self.beta * self.G ** (1 - self.gamma)

    @property
    def flag_tvc(self) -> bool:
        return self.contraction < 1

    @property
    def flag_p_pos(self) -> bool:
        return self.contraction > (self.b / self.a) ** self.gamma

    @property
    def flag_D_small(self) -> bool:
        return self.G * self.D / (self.G - 1) < self.b

    def flags(self) -> dict:
        return {"flag_tvc": self.flag_tvc, "flag_p_pos": self.flag_p_pos,
                "flag_D_small": self.flag_D_small}


@dataclass(frozen=True)
class BewleyGrowth:
    p: float
    prices: TrendedPath
    dividends: TrendedPath
    rate: float
    verdict: BubbleVerdict
    flags: dict
    euler_rich_residual: float
    euler_poor_slack: float
    contraction: float


def solve_bewley_growth(spec: BewleySpec, horizon: int = 400,
                        margin: float = DEFAULT_MARGIN) -> BewleyGrowth:
    """Bubbly equilibrium with growth: P_t = D/(G - 1) + p G^t at the rate R = G.

    p solves the rich agent's Euler equation beta G ((b+p)/(a-p) G)^(-gamma) = 1.
    """
    for name, ok in spec.flags().items():
        if not ok:
            raise RegimeError(f"parameter restriction violated: {name}")
    k = spec.contraction ** (1 / spec.gamma)
    p = (spec.a * k - spec.b) / (1 + k)
    G, gamma, beta = spec.G, spec.gamma, spec.beta
    t = np.arange(horizon + 1)
    fundamental = spec.D / (G - 1)
    prices = TrendedPath(G, fundamental * G ** -t.astype(float) + p)
    dividends = TrendedPath(1.0, np.full(horizon + 1, float(spec.D)))
    ratio = (spec.b + p) / (spec.a - p)
    rich = beta * G * (ratio * G) ** -gamma
    poor = beta * G * (G / ratio) ** -gamma
    verdict = detect_bubble(prices, dividends, margin)
    return BewleyGrowth(p, prices, dividends, G, verdict, spec.flags(),
                        abs(rich - 1), 1 - poor, spec.contraction)


def bewley_growth_consumption(spec: BewleySpec, p: float, horizon: int) -> tuple:
    """Detrended (rich, poor) consumption and (rich, poor) endowments, t = 0..horizon."""
    G = spec.G
    t = np.arange(horizon + 1, dtype=float)
    fundamental = spec.D / (G - 1)
    rich_c = np.full(horizon + 1, spec.a - p)
    poor_c = np.full(horizon + 1, spec.b + p)
    rich_e = spec.a + fundamental * G ** -t
    poor_e = spec.b - G * fundamental * G ** -t
    return rich_c, poor_c, rich_e, poor_e


def transversality_terms(spec: BewleySpec, sol: BewleyGrowth) -> np.ndarray:
    """beta^t u'(c_t) P_t along the rich agent's consumption, up to a constant."""
    t = sol.prices.t.astype(float)
    log_terms = (t * math.log(spec.beta)
                 - spec.gamma * (np.log(spec.a - sol.p) + t * math.log(spec.G))
                 + sol.prices.log_values())
    return np.exp(log_terms)
