"""Two-sector economy with stocks and land: aggregate asset value and bubble substitution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BubbleVerdict, DomainError, SolverError, TrendedPath, Verdict
from .pricing import (
    DEFAULT_MARGIN,
    ArrowDebreuLadder,
    _tail_window,
    detect_bubble,
    fit_geometric,
    ladder_from_rates,
)

NOT_COVERED = "NotCovered"
NEGATIVE_B_TOL = 1e-8
NO_ARBITRAGE_TOL = 1e-8


@dataclass(frozen=True)
class CESValues:
    F: float
    F_K: float
    F_L: float
    factor_ratio: float


def ces_eval(alpha: float, sigma: float, K, L) -> CESValues:
    """Output, marginal products and F_K K / (F_L L) for the CES technology.

    Works elementwise on arrays. ``sigma == 1`` is the Cobb-Douglas case.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    K = np.asarray(K, dtype=float)
    L = np.asarray(L, dtype=float)
    if np.any(~(K > 0)) or np.any(~(L > 0)):
        raise DomainError("K and L must be positive")
    if sigma == 1:
        F = K ** alpha * L ** (1 - alpha)
        F_K = alpha * F / K
        F_L = (1 - alpha) * F / L
        ratio = np.full(np.broadcast(K, L).shape, alpha / (1 - alpha))
    else:
        rho = 1 - 1 / sigma
        inner = alpha * K ** rho + (1 - alpha) * L ** rho
        F = inner ** (1 / rho)
        common = inner ** (1 / (sigma - 1))
        F_K = common * alpha * K ** (-1 / sigma)
        F_L = common * (1 - alpha) * L ** (-1 / sigma)
        ratio = alpha / (1 - alpha) * (K / L) ** rho
    if F.ndim == 0:
        return CESValues(float(F), float(F_K), float(F_L), float(ratio))
    return CESValues(F, F_K, F_L, ratio)


@dataclass(frozen=True)
class TwoSectorEconomy:
    """K_t = K0 GK^t, L_t = L0 GL^t, land rent D_t = D0 GX^t."""

    alpha: float = 0.3
    sigma: float = 0.5
    K0: float = 10.0
    L0: float = 1.0
    D0: float = 0.01
    GK: float = 1.0
    GL: float = 1.0
    GX: float = 1.0
    N: float = 1.0
    X: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta!r}")
        for name in ("sigma", "K0", "L0", "D0", "GK", "GL", "GX", "N", "X"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")

    @property
    def boundary(self) -> bool:
        """Knife-edge growth equalities where the strict rule has no slack."""
        return (math.isclose(self.GK, self.GL, rel_tol=1e-12)
                or math.isclose(self.GL, self.GX, rel_tol=1e-12))


@dataclass(frozen=True)
class AggregateSim:
    """Series detrended by GL; ``log_discount`` is log(q_t GL^t)."""

    econ: TwoSectorEconomy
    S: TrendedPath = field(repr=False)
    E: TrendedPath = field(repr=False)
    capital_income: np.ndarray = field(repr=False)
    land_income: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    q: ArrowDebreuLadder = field(repr=False)
    log_discount: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    wage: np.ndarray = field(repr=False)
    output: np.ndarray = field(repr=False)
    factor_ratio: np.ndarray = field(repr=False)
    verdict: BubbleVerdict

    @property
    def horizon(self) -> int:
        return self.S.horizon


def simulate_aggregate(econ: TwoSectorEconomy, T: int = 400,
                       margin: float = DEFAULT_MARGIN) -> AggregateSim:
    """Aggregate asset value S_t = beta F_L L_t, dividends E_t and rates R_t."""
    if T < 2:
        raise DomainError("horizon must be at least 2")
    t = np.arange(T + 1, dtype=float)
    # F is homogeneous of degree one, so prices depend on k = K/L only
    k = econ.K0 / econ.L0 * np.exp(t * (math.log(econ.GK) - math.log(econ.GL)))
    ces = ces_eval(econ.alpha, econ.sigma, k, np.ones_like(k))
    L = econ.L0  # detrended labor
    s = econ.beta * ces.F_L * L
    cap = ces.F_K * k * L
    land = econ.D0 * econ.X * np.exp(t * (math.log(econ.GX) - math.log(econ.GL)))
    e = cap + land
    step = s[:-1] / (s[1:] + e[1:])
    R = econ.GL / step
    log_discount = np.concatenate([[0.0], np.cumsum(np.log(step))])
    S = TrendedPath(econ.GL, s)
    E = TrendedPath(econ.GL, e)
    verdict = detect_bubble(S, E, margin)
    return AggregateSim(econ, S, E, cap, land, R, ladder_from_rates(R), log_discount,
                        ces.F_K, ces.F_L, ces.F * L, ces.factor_ratio, verdict)


@dataclass(frozen=True)
class TwoSectorVerdict:
    analytic: str
    numeric: str
    boundary: bool
    detail: BubbleVerdict

    @property
    def agree(self) -> bool:
        return self.analytic == self.numeric


def analytic_rule(econ: TwoSectorEconomy) -> str:
    """Bubbly iff GK > GL > GX, for sigma < 1 only."""
    if econ.sigma >= 1:
        return NOT_COVERED
    bubbly = econ.GK > econ.GL > econ.GX and not econ.boundary
    return (Verdict.BUBBLY if bubbly else Verdict.FUNDAMENTAL).value


def classify_two_sector(econ: TwoSectorEconomy, T: int = 400,
                        margin: float = DEFAULT_MARGIN) -> TwoSectorVerdict:
    sim = simulate_aggregate(econ, T, margin)
    return TwoSectorVerdict(analytic_rule(econ), sim.verdict.classification.value,
                            econ.boundary, sim.verdict)


@dataclass(frozen=True)
class BubbleDecomposition:
    """Per-share stock and per-unit land prices for one bubble split theta (detrended by GL)."""

    theta: float
    VS: np.ndarray = field(repr=False)
    VL: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    bubble_limit: float
    tail_mismatch: float
    clamped: bool

    def stock_returns(self, sim: AggregateSim) -> np.ndarray:
        N = sim.econ.N
        return sim.econ.GL * (self.Q[1:] + sim.capital_income[1:] / N) / self.Q[:-1]

    def land_returns(self, sim: AggregateSim) -> np.ndarray:
        X = sim.econ.X
        return sim.econ.GL * (self.P[1:] + sim.land_income[1:] / X) / self.P[:-1]

    def old_consumption(self, sim: AggregateSim) -> np.ndarray:
        """Q_t N + P_t X + E_t: what the old sell and receive at t."""
        e = sim.econ
        return self.Q * e.N + self.P * e.X + sim.E.levels


def _tail_multiple(log_terms: np.ndarray, window: float = 1 / 3) -> float:
    """r/(1 - r) for the fitted limiting ratio r of a positive sequence given in logs."""
    T = log_terms.size - 1
    sel = np.arange(_tail_window(T, window), T + 1)
    ratio, _ = fit_geometric(sel, log_terms[sel])
    if ratio >= 1:
        raise SolverError("fundamental value divergent")
    return ratio / (1 - ratio)


def decompose_bubble(sim: AggregateSim, theta: float) -> BubbleDecomposition:
    """Split S_t into stock and land fundamentals plus a bubble shared theta : 1 - theta.

    Fundamental values run backward from the horizon, V_t = (V_{t+1} + d_{t+1}) / R_t,
    so no Arrow-Debreu price is ever formed and nothing underflows. At the
    horizon the stock and land tails are geometric extrapolations of q_s d_s.
    The bubble at T is zero when the yield test says Fundamental; otherwise it
    is S_T minus the extrapolated tail of all dividends. The stock and land
    tails are rescaled to add up to S_T minus that bubble.
    """
    if not 0 <= theta <= 1:
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    cls = sim.verdict.classification
    if cls is Verdict.INCONCLUSIVE:
        raise SolverError(f"bubble size undetermined: {sim.verdict.reason}")
    e = sim.econ
    s, E = sim.S.levels, sim.E.levels
    cap, land = sim.capital_income, sim.land_income
    log_q = sim.log_discount
    if cls is Verdict.BUBBLY:
        fund_T = E[-1] * _tail_multiple(log_q + np.log(E))
        if not fund_T < s[-1]:
            raise SolverError("bubbly verdict but non-positive bubble; horizon too short")
    else:
        fund_T = s[-1]
    tail_S = cap[-1] * _tail_multiple(log_q + np.log(cap))
    tail_L = land[-1] * _tail_multiple(log_q + np.log(land))
    raw = tail_S + tail_L
    mismatch = abs(raw - fund_T) / fund_T
    tail_S, tail_L = fund_T * tail_S / raw, fund_T * tail_L / raw

    step = s[:-1] / (s[1:] + E[1:])  # q_{t+1} / q_t
    T = s.size - 1
    VS, VL = np.empty(T + 1), np.empty(T + 1)
    VS[T], VL[T] = tail_S / e.N, tail_L / e.X
    for t in range(T - 1, -1, -1):
        VS[t] = step[t] * (VS[t + 1] + cap[t + 1] / e.N)
        VL[t] = step[t] * (VL[t + 1] + land[t + 1] / e.X)
    B = s - (VS * e.N + VL * e.X)
    if cls is not Verdict.BUBBLY:
        B = np.where(np.abs(B) <= NEGATIVE_B_TOL * s, 0.0, B)
    if np.any(B < -NEGATIVE_B_TOL * s):
        raise SolverError("aggregate bubble negative beyond tolerance; horizon too short")
    clamped = bool(np.any(B < 0))
    B = np.maximum(B, 0.0)
    Qp = VS + theta / e.N * B
    Pp = VL + (1 - theta) / e.X * B
    dec = BubbleDecomposition(theta, VS, VL, B, Qp, Pp, float(B[0]), mismatch, clamped)
    _check_no_arbitrage(sim, dec)
    return dec


def _check_no_arbitrage(sim: AggregateSim, dec: BubbleDecomposition) -> None:
    R = sim.R
    for name, ret in (("stock", dec.stock_returns(sim)), ("land", dec.land_returns(sim))):
        gap = np.max(np.abs(ret / R - 1))
        if gap > NO_ARBITRAGE_TOL:
            raise SolverError(f"{name} no-arbitrage residual {gap:.3g} above tolerance")


TWO_SECTOR_COLUMNS = ("t", "S", "E", "R", "q", "VS", "VL", "B", "Q", "P")
SWEEP_COLUMNS = ("GK", "GL", "GX", "sigma", "analytic", "numeric")
