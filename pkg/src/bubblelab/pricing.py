"""Arrow-Debreu prices, fundamental values, the dividend-yield bubble test, firm accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BubbleVerdict,
    DomainError,
    SolverError,
    TrendedPath,
    Verdict,
    as_path,
)

DEFAULT_MARGIN = 0.005
DEFAULT_FIT_TOL = 0.1


@dataclass(frozen=True)
class ArrowDebreuLadder:
    """Date-0 prices q_0 = 1, q_{t+1} = q_t / R_t."""

    q: np.ndarray
    rates: np.ndarray

    @property
    def horizon(self) -> int:
        return self.q.size - 1

    @property
    def log_q(self) -> np.ndarray:
        return np.concatenate([[0.0], -np.cumsum(np.log(self.rates))])


def ladder_from_rates(rates) -> ArrowDebreuLadder:
    rates = np.asarray(rates, dtype=float).ravel()
    if np.any(~(rates > 0)):
        raise DomainError("gross rates must be positive")
    q = np.empty(rates.size + 1)
    q[0] = 1.0
    for t, r in enumerate(rates):
        q[t + 1] = q[t] / r
    q.setflags(write=False)
    rates = rates.copy()
    rates.setflags(write=False)
    return ArrowDebreuLadder(q, rates)


def implied_rates(prices, dividends) -> np.ndarray:
    """Gross returns R_t = (P_{t+1} + D_{t+1}) / P_t, evaluated without leaving detrended units."""
    P, D = as_path(prices), as_path(dividends)
    _check_same_horizon(P, D)
    x, d = P.levels, D.levels
    rel = math.log(D.growth) - math.log(P.growth)
    t1 = np.arange(1, x.size)
    return P.growth * (x[1:] + d[1:] * np.exp(t1 * rel)) / x[:-1]


def ladder_from_prices(prices, dividends) -> ArrowDebreuLadder:
    return ladder_from_rates(implied_rates(prices, dividends))


def _check_same_horizon(P: TrendedPath, D: TrendedPath) -> None:
    if P.horizon != D.horizon:
        raise DomainError(f"horizons differ: prices {P.horizon}, dividends {D.horizon}")


def fit_geometric(t, log_x):
    """Least-squares fit of log_x = c + t log r; returns (r, max abs residual)."""
    t = np.asarray(t, dtype=float)
    log_x = np.asarray(log_x, dtype=float)
    slope, intercept = np.polyfit(t, log_x, 1)
    resid = log_x - (intercept + slope * t)
    return math.exp(slope), float(np.max(np.abs(resid)))


def _tail_window(T: int, fraction: float) -> int:
    return max(1, T - int(T * fraction))


def log_yields(prices, dividends) -> np.ndarray:
    """log(D_t / P_t) for t = 0..T; -inf where the dividend is zero."""
    P, D = as_path(prices), as_path(dividends)
    t = P.t
    with np.errstate(divide="ignore"):
        return (np.log(D.levels) - np.log(P.levels)
                + t * (math.log(D.growth) - math.log(P.growth)))


def detect_bubble(prices, dividends, margin: float = DEFAULT_MARGIN, *,
                  window: float = 1 / 3, fit_tol: float = DEFAULT_FIT_TOL) -> BubbleVerdict:
    """Classify a positive price path by the convergence of sum_t D_t/P_t.

    The limiting ratio of successive yields is fitted on the last ``window``
    share of the horizon. Ratios below ``1 - margin`` are Bubbly (the series
    converges with a finite geometric tail bound); ratios at or above
    ``1 - margin/4`` keep the yields bounded away from zero and are
    Fundamental; the band in between, poor geometric fits, and zero
    dividends inside the fit window are Inconclusive.
    """
    P, D = as_path(prices), as_path(dividends)
    _check_same_horizon(P, D)
    if np.any(P.levels <= 0):
        raise DomainError("prices must be positive")
    if np.any(D.levels < 0):
        raise DomainError("dividends must be non-negative")
    if not 0 < margin < 1:
        raise DomainError(f"margin must lie in (0, 1), got {margin!r}")
    T = P.horizon
    if T < 2:
        raise DomainError("need a horizon of at least 2 periods")

    ly = log_yields(P, D)[1:]
    yields = np.exp(ly)
    partial = math.fsum(yields)

    def verdict(cls, ratio, bound, reason):
        return BubbleVerdict(cls, partial, ratio, bound, margin, T, reason)

    positive = yields > 0
    if not positive.any():
        return verdict(Verdict.BUBBLY, 0.0, 0.0, "no dividends: fundamental value is zero")

    start = _tail_window(T, window)
    idx = np.arange(1, T + 1)
    sel = idx >= start
    if sel.sum() < 3:
        return verdict(Verdict.INCONCLUSIVE, math.nan, math.inf, "fit window too short")
    if not positive[sel].all():
        return verdict(Verdict.INCONCLUSIVE, math.nan, math.inf,
                       "zero dividends inside the fit window")

    ratio, resid = fit_geometric(idx[sel], ly[sel])
    if resid > fit_tol and ratio >= 1 and np.min(ly[sel]) >= ly[sel][0]:
        # terms that never drop below their starting level cannot sum to a finite value
        return verdict(Verdict.FUNDAMENTAL, ratio, math.inf, "yields not decaying")
    if resid > fit_tol:
        return verdict(Verdict.INCONCLUSIVE, ratio, math.inf,
                       f"yields not asymptotically geometric (residual {resid:.3g})")
    if ratio < 1 - margin:
        bound = yields[-1] * ratio / (1 - ratio)
        return verdict(Verdict.BUBBLY, ratio, bound, "yield series converges")
    if ratio >= 1 - margin / 4:
        return verdict(Verdict.FUNDAMENTAL, ratio, math.inf, "yields bounded away from zero")
    return verdict(Verdict.INCONCLUSIVE, ratio, math.inf, "tail ratio inside the margin band")


def sandwich(prices, dividends, T: int, ladder: ArrowDebreuLadder | None = None):
    """Log of the three sides of 1 + S_T <= q_0 P_0 / (q_T P_T) <= exp(S_T).

    S_T = sum_{t=1}^T D_t/P_t. The middle term comes from the ladder and the
    price path directly, not from the yields.
    """
    P, D = as_path(prices), as_path(dividends)
    if ladder is None:
        ladder = ladder_from_prices(P, D)
    yields = np.exp(log_yields(P, D)[1: T + 1])
    s = math.fsum(yields)
    lp = P.log_values()
    middle = lp[0] - (ladder.log_q[T] + lp[T])
    return math.log1p(s), middle, s


@dataclass(frozen=True)
class FundamentalValue:
    values: np.ndarray
    tail: float
    tail_ratio: float
    divergent: bool


def fundamental_value(ladder: ArrowDebreuLadder, dividends, tail: str = "geometric",
                      *, window: float = 1 / 3) -> FundamentalValue:
    """V_t = (1/q_t) (sum_{s=t+1}^T q_s D_s + tail estimate).

    With ``tail="geometric"`` the neglected remainder is q_T D_T r/(1 - r),
    r the fitted limiting ratio of q_s D_s; r >= 1 marks the value divergent
    and every V_t is reported as inf. ``tail="none"`` truncates at T.
    """
    D = as_path(dividends)
    T = D.horizon
    if ladder.horizon < T:
        raise DomainError("ladder horizon shorter than the dividend series")
    if tail not in ("geometric", "none"):
        raise DomainError(f"unknown tail policy {tail!r}")
    log_q = ladder.log_q[: T + 1]
    with np.errstate(divide="ignore"):
        log_c = log_q + D.log_values()
    c = np.exp(log_c)
    suffix = np.concatenate([np.cumsum(c[::-1])[::-1][1:], [0.0]])

    tail_value, ratio = 0.0, math.nan
    if tail == "geometric" and T >= 3 and c[-1] > 0:
        start = _tail_window(T, window)
        sel = np.arange(start, T + 1)
        if np.all(c[sel] > 0):
            ratio, _ = fit_geometric(sel, log_c[sel])
            if ratio >= 1 - 1e-9:
                inf = np.full(T + 1, math.inf)
                return FundamentalValue(inf, math.inf, ratio, True)
            tail_value = c[-1] * ratio / (1 - ratio)
    values = (suffix + tail_value) / np.exp(log_q)
    values.setflags(write=False)
    return FundamentalValue(values, tail_value, ratio, False)


@dataclass(frozen=True)
class BubbleComponent:
    """Discounted resale value lim q_T P_T and, with dividends, B_t = P_t - V_t."""

    limit: float
    verdict: Verdict
    no_bubble: bool
    ratio: float
    bubble: np.ndarray | None = None
    fundamental: np.ndarray | None = None
    reason: str = ""


def bubble_component(prices, ladder: ArrowDebreuLadder, dividends=None, *,
                     window: float = 0.25, tol: float = 1e-8,
                     fit_tol: float = DEFAULT_FIT_TOL) -> BubbleComponent:
    """Estimate lim q_T P_T from the price path and the ladder alone.

    The decrements q_{t-1}P_{t-1} - q_t P_t are fitted as a geometric sequence
    on the last ``window`` share of the horizon and their tail is subtracted
    from q_T P_T. This route never looks at dividends, so it is independent of
    the yield test.
    """
    P = as_path(prices)
    T = P.horizon
    if ladder.horizon < T:
        raise DomainError("ladder horizon shorter than the price series")
    log_m = ladder.log_q[: T + 1] + P.log_values()
    m = np.exp(log_m)
    scale = m[0]
    dec = m[:-1] - m[1:]
    # exp of a sum of T logs carries relative error of order eps * |log terms|
    noise = 16 * np.finfo(float).eps * (1 + np.max(np.abs(ladder.log_q[: T + 1]))
                                        + np.max(np.abs(P.log_values()))) * np.max(m)

    V = B = None
    if dividends is not None:
        fv = fundamental_value(ladder, dividends)
        V = fv.values
        B = P.values() - V

    def result(limit, verdict, ratio, reason):
        return BubbleComponent(limit, verdict, verdict is Verdict.FUNDAMENTAL, ratio,
                               B, V, reason)

    start = _tail_window(T, window)
    sel = np.arange(start, T + 1)
    tail_dec = dec[sel - 1]
    if np.any(tail_dec < -noise):
        return result(math.nan, Verdict.INCONCLUSIVE, math.nan,
                      "discounted price rises in the fit window")
    if tail_dec[-1] <= noise:
        # decrements have reached rounding level; the remaining tail is negligible
        limit = float(m[-1])
        ratio = 0.0
    elif np.any(tail_dec <= noise):
        return result(math.nan, Verdict.INCONCLUSIVE, math.nan,
                      "discounted price not monotone in the fit window")
    else:
        ratio, resid = fit_geometric(sel, np.log(tail_dec))
        if ratio >= 1 - 1e-9 or resid > fit_tol:
            return result(math.nan, Verdict.INCONCLUSIVE, ratio,
                          "no geometric fit for the discounted price")
        limit = float(m[-1] - dec[-1] * ratio / (1 - ratio))
    if limit > tol * scale:
        return result(limit, Verdict.BUBBLY, ratio, "no-bubble condition violated")
    return result(max(limit, 0.0), Verdict.FUNDAMENTAL, ratio, "no-bubble condition holds")


@dataclass(frozen=True)
class FirmSeries:
    """Per-share price p_t, dividend d_t, shares S_t, free cash flow C_t, firm value P_t = p_t S_t.

    Index 0 of ``dividends`` and ``cashflows`` is unused.
    """

    shares: np.ndarray
    cashflows: np.ndarray
    prices: np.ndarray
    dividends: np.ndarray
    rates: np.ndarray
    violations: tuple
    cashflow_residual: float

    @property
    def firm_value(self) -> np.ndarray:
        return self.prices * self.shares


def firm_accounting(shares, cashflows, rates, p0: float, *,
                    rounding_tol: float = 8.0) -> FirmSeries:
    """Propagate (p_t, d_t) from share counts, cash flows and risk-free rates.

    No-arbitrage fixes p_t + d_t = R_{t-1} p_{t-1}; the accounting identity
    p_t S_t + C_t = (p_t + d_t) S_{t-1} then pins p_t. The recursion amplifies
    rounding by R each period, so a running forward error bound is carried
    along: dividends within ``rounding_tol`` times that bound are rounding
    noise and set to zero, genuinely negative ones are kept and listed in
    ``violations``.
    """
    S = np.asarray(shares, dtype=float)
    C = np.asarray(cashflows, dtype=float)
    R = np.asarray(rates, dtype=float)
    if np.any(~(S > 0)):
        raise DomainError("shares must be positive")
    if np.any(~(R > 0)):
        raise DomainError("rates must be positive")
    if C.size != S.size or R.size != S.size - 1:
        raise DomainError("need len(cashflows) == len(shares) == len(rates) + 1")
    if not p0 > 0:
        raise DomainError("initial price must be positive")
    eps = np.finfo(float).eps
    T = S.size - 1
    p = np.empty(T + 1)
    d = np.zeros(T + 1)
    p[0] = p0
    err = eps * p0 * S[0]  # absolute error bound on firm value p_t S_t
    violations = []
    for t in range(T):
        gross = R[t] * p[t]
        value = gross * S[t]
        p[t + 1] = (value - C[t + 1]) / S[t + 1]
        if p[t + 1] <= 0:
            raise SolverError(f"implied stock price non-positive at t={t + 1}")
        err_next = R[t] * err + 2 * eps * (value + abs(C[t + 1]))
        dt = gross - p[t + 1]
        noise = rounding_tol * (R[t] * err / S[t] + err_next / S[t + 1] + eps * gross)
        if abs(dt) <= noise:
            dt = 0.0
        elif dt < 0:
            violations.append(t + 1)
        d[t + 1] = dt
        err = err_next
    lhs = C[1:]
    rhs = d[1:] * S[:-1] + p[1:] * (S[:-1] - S[1:])
    scale = np.maximum.reduce([np.abs(lhs), p[1:] * S[:-1], d[1:] * S[:-1]])
    resid = float(np.max(np.abs(lhs - rhs) / scale)) if T else 0.0
    for arr in (S, C, p, d, R):
        arr.setflags(write=False)
    return FirmSeries(S, C, p, d, R, tuple(violations), resid)


@dataclass(frozen=True)
class FirmVerdicts:
    stock: BubbleVerdict
    value: BubbleVerdict
    stock_class: Verdict
    value_class: Verdict
    share_regime: str
    consistent: bool


def share_regime(shares, margin: float = DEFAULT_MARGIN, window: float = 1 / 3) -> str:
    """Finite-horizon proxy for liminf/limsup of the share count.

    Returns "vanishing", "exploding", "bounded" or "unclassifiable"; only
    monotone trends over the fit window are classified.
    """
    S = np.asarray(shares, dtype=float)
    T = S.size - 1
    sel = np.arange(_tail_window(T, window), T + 1)
    r, resid = fit_geometric(sel, np.log(S[sel]))
    steps = np.diff(S[sel])
    slack = 1e-12 * np.max(S[sel])
    if resid > DEFAULT_FIT_TOL:
        return "unclassifiable"
    if abs(r - 1) <= margin / 4 and np.ptp(np.log(S[sel])) <= DEFAULT_FIT_TOL:
        return "bounded"
    if r < 1 - margin and np.all(steps <= slack):
        return "vanishing"
    if r > 1 + margin and np.all(steps >= -slack):
        return "exploding"
    return "unclassifiable"


def classify_firm_bubbles(series: FirmSeries, ladder: ArrowDebreuLadder | None = None,
                          margin: float = DEFAULT_MARGIN) -> FirmVerdicts:
    """Yield tests on (p_t, d_t) and (P_t, C_t), reconciled with the share-count rules.

    Vanishing shares rule out a firm-value bubble, exploding shares rule out a
    stock bubble, and bounded shares make the two verdicts coincide.
    ``consistent`` is False when a yield test contradicts the applicable rule;
    the rule's verdict is then reported in ``*_class``.
    """
    C = series.cashflows.copy()
    C[0] = 0.0
    stock = detect_bubble(series.prices, series.dividends, margin)
    value = detect_bubble(series.firm_value, C, margin)
    regime = share_regime(series.shares, margin)
    stock_cls, value_cls = stock.classification, value.classification
    consistent = True
    if regime == "vanishing":
        consistent = value_cls is Verdict.FUNDAMENTAL
        value_cls = Verdict.FUNDAMENTAL
    elif regime == "exploding":
        consistent = stock_cls is Verdict.FUNDAMENTAL
        stock_cls = Verdict.FUNDAMENTAL
    elif regime == "bounded":
        consistent = stock_cls is value_cls
    if ladder is not None:
        for path, cls in ((series.prices, stock_cls), (series.firm_value, value_cls)):
            bc = bubble_component(path, ladder)
            if bc.verdict is not Verdict.INCONCLUSIVE and bc.verdict is not cls:
                consistent = False
    return FirmVerdicts(stock, value, stock_cls, value_cls, regime, consistent)
