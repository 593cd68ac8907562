"""Detrended price dynamics: steady states, Jacobians, stable-manifold shooting, regimes."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._roots import expand_upper, find_root
from .core import (
    BubbleVerdict,
    DomainError,
    GrowthEconomy,
    PathInfeasible,
    RegimeError,
    SolverError,
    TrendedPath,
    UtilityKernel,
    mrs_ratio,
)
from .pricing import DEFAULT_MARGIN, detect_bubble

KNIFE_EDGE_TOL = 1e-10
SINGULAR_D_TOL = 1e-10
RESONANCE_TOL = 1e-8
STEP_RESIDUAL_TOL = 1e-12
MAX_BISECTIONS = 200


class Variant(str, enum.Enum):
    FUNDAMENTAL = "Fundamental"
    BUBBLY = "Bubbly"

    def __str__(self) -> str:
        return self.value


class Regime(str, enum.Enum):
    FUNDAMENTAL_ONLY = "FundamentalOnly"
    COEXISTENCE = "Coexistence"
    BUBBLE_NECESSITY = "BubbleNecessity"
    KNIFE_EDGE = "KnifeEdge"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DetrendedSystem:
    """Autonomous system in xi = (xi1, xi2), xi2 = (Gd/G)^t.

    The fundamental variant detrends the price by Gd, the bubbly one by G.
    """

    variant: Variant
    econ: GrowthEconomy
    kernel: UtilityKernel

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def trend(self) -> float:
        return self.econ.Gd if self.variant is Variant.FUNDAMENTAL else self.econ.G

    @property
    def contraction(self) -> float:
        return self.econ.Gd / self.econ.G

    def xi2(self, t) -> np.ndarray | float:
        return np.exp(np.asarray(t, dtype=float) * math.log(self.contraction))

    def young(self, xi1: float, xi2: float) -> float:
        if self.variant is Variant.FUNDAMENTAL:
            return self.econ.a - xi1 * xi2
        return self.econ.a - xi1

    def old(self, eta1: float, eta2: float, xi2: float) -> float:
        e = self.econ
        if self.variant is Variant.FUNDAMENTAL:
            return e.G * e.b + e.Gd * (eta1 + e.D) * xi2
        return e.G * (e.b + eta1 + e.D * eta2)

    def euler_residual(self, xi, eta) -> float:
        """|rho(y, z) xi1 / (return on one detrended unit) - 1| at consecutive states."""
        (x1, x2), (e1, e2) = xi, eta
        rho = mrs_ratio(self.kernel, self.young(x1, x2), self.old(e1, e2, x2))
        e = self.econ
        if self.variant is Variant.FUNDAMENTAL:
            ret = e.Gd * (e1 + e.D)
        else:
            ret = e.G * (e1 + e.D * e2)
        return abs(rho * x1 / ret - 1)


@dataclass(frozen=True)
class SteadyStateReport:
    variant: Variant
    xi1_star: float
    lambda1: float = math.nan
    lambda2: float = math.nan
    slope: float = math.nan
    jacobian: np.ndarray | None = field(default=None, repr=False)
    d_value: float = math.nan
    n_value: float = math.nan
    flags: dict = field(default_factory=dict)

    @property
    def exists(self) -> bool:
        return bool(self.flags.get("exists"))

    @property
    def saddle(self) -> bool:
        return bool(self.flags.get("saddle"))


def threshold_w(kernel: UtilityKernel, G: float, target: float) -> float:
    """Unique w with mrs_ratio(1, G w) = target."""
    if not target > 0:
        raise DomainError(f"target must be positive, got {target!r}")
    if not G > 0:
        raise DomainError(f"G must be positive, got {G!r}")

    # rho(1, G e^s) is increasing in s; work in logs so the bracket can span decades
    def h(s):
        return math.log(mrs_ratio(kernel, 1.0, G * math.exp(s))) - math.log(target)

    lo, hi = -1.0, 1.0
    while h(lo) > 0:
        lo *= 2
        if lo < -700:
            raise SolverError("threshold unattainable")
    while h(hi) < 0:
        hi *= 2
        if hi > 700:
            raise SolverError("threshold unattainable")
    w = math.exp(find_root(h, lo, hi))
    if abs(mrs_ratio(kernel, 1.0, G * w) / target - 1) > 1e-12:
        raise SolverError("threshold residual above 1e-12")
    return w


def _fundamental_steady_state(system: DetrendedSystem) -> SteadyStateReport:
    e, k = system.econ, system.kernel
    if e.b == 0:
        return SteadyStateReport(Variant.FUNDAMENTAL, math.nan, flags={"exists": False})
    der = k.evaluate(e.a, e.G * e.b)
    gap = der.U_y - e.Gd * der.U_z
    # existence needs Gd < rho(a, Gb); at equality the steady state sits at infinity
    exists = gap > 0 and not math.isclose(der.U_y / der.U_z, e.Gd,
                                          rel_tol=KNIFE_EDGE_TOL, abs_tol=0)
    xi1 = e.Gd * e.D * der.U_z / gap if exists else math.nan
    return SteadyStateReport(Variant.FUNDAMENTAL, xi1, flags={"exists": exists})


def _bubbly_steady_state(system: DetrendedSystem, corner: bool) -> SteadyStateReport:
    e, k = system.econ, system.kernel
    w_b = threshold_w(k, e.G, e.G)
    boundary = abs(e.w - w_b) <= KNIFE_EDGE_TOL
    interior = e.w < w_b and not boundary
    xi1 = 0.0 if corner or not interior else (w_b * e.a - e.b) / (1 + w_b)
    if xi1 == 0 and e.b == 0:
        return SteadyStateReport(Variant.BUBBLY, 0.0, flags={
            "exists": False, "boundary": boundary, "corner": True})
    der = k.evaluate(e.a - xi1, e.G * (e.b + xi1))
    d = e.G * (der.U_z + e.G * xi1 * der.U_zz - xi1 * der.U_yz)
    n = e.G * xi1 * der.U_yz + der.U_y - xi1 * der.U_yy
    flags = {
        "exists": interior and not corner,
        "boundary": boundary,
        "corner": xi1 == 0,
        "singular_d": abs(d) <= SINGULAR_D_TOL * abs(n),
        "uniqueness_not_guaranteed": d < 0,
    }
    flags["resonant"] = (not flags["singular_d"]
                         and min(abs(n / d - 1), abs(n / d + 1)) <= RESONANCE_TOL)
    if flags["exists"] and not n - d > 0:
        raise SolverError(f"bubbly steady state violates n - d > 0: n={n!r}, d={d!r}")
    return SteadyStateReport(Variant.BUBBLY, xi1, d_value=d, n_value=n, flags=flags)


def steady_state(system: DetrendedSystem, *, corner: bool = False) -> SteadyStateReport:
    """Steady state (xi1*, 0) of the system, with existence flags.

    ``corner=True`` evaluates the bubbly variant at xi1* = 0, the point where
    the bubble is negligible relative to the economy.
    """
    if system.variant is Variant.FUNDAMENTAL:
        return _fundamental_steady_state(system)
    return _bubbly_steady_state(system, corner)


def linearize(system: DetrendedSystem, report: SteadyStateReport) -> SteadyStateReport:
    """Fill in eigenvalues, the analytic Jacobian and the stable-eigenvector slope."""
    e = system.econ
    lam2 = e.Gd / e.G
    if system.variant is Variant.FUNDAMENTAL:
        if not report.exists:
            raise RegimeError("fundamental steady state does not exist")
        xi = report.xi1_star
        der = system.kernel.evaluate(e.a, e.G * e.b)
        m = e.Gd * (xi + e.D)
        j12 = xi ** 2 * der.U_yy - 2 * xi * m * der.U_yz + m ** 2 * der.U_zz
        lam1 = der.U_y / (e.Gd * der.U_z)
        off = -j12 / (e.Gd * der.U_z)
    else:
        if math.isnan(report.d_value):
            raise RegimeError("bubbly steady state does not exist")
        if report.flags.get("singular_d"):
            raise RegimeError("implicit function theorem inapplicable: d = 0")
        lam1 = report.n_value / report.d_value
        off = -e.D * lam2
    jac = np.array([[lam1, off], [0.0, lam2]])
    jac.setflags(write=False)
    slope = off / (lam2 - lam1) if lam1 != lam2 else math.nan
    flags = dict(report.flags)
    flags["saddle"] = abs(lam1) > 1 > lam2 > 0
    return dataclasses.replace(report, lambda1=lam1, lambda2=lam2, slope=slope,
                               jacobian=jac, flags=flags)


def forward_step(system: DetrendedSystem, xi) -> tuple[float, float]:
    """Next state: xi2' = (Gd/G) xi2 and xi1' from the Euler equation."""
    xi1, xi2 = float(xi[0]), float(xi[1])
    e = system.econ
    xi2n = system.contraction * xi2
    y = system.young(xi1, xi2)
    if not y > 0:
        raise PathInfeasible("path infeasible: young consumption non-positive", "above")
    if not xi1 >= 0:
        raise PathInfeasible("path infeasible: negative price", "below")
    # x is the detrended return-weighted payoff: Gd(eta1 + D) or G(eta1 + D eta2)
    c = e.G * e.b
    k = xi2 if system.variant is Variant.FUNDAMENTAL else 1.0
    if k == 0:
        if c <= 0:
            raise DomainError("old consumption is zero at the steady state")
        x = xi1 * mrs_ratio(system.kernel, y, c)
    else:
        def f(x):
            return xi1 * mrs_ratio(system.kernel, y, c + k * x) - x

        lo = 0.0 if c > 0 else 1e-300 / k
        if xi1 == 0:
            x = 0.0
        else:
            hi = expand_upper(f, lo, max(1.0, xi1))
            if hi is None:
                raise PathInfeasible("path infeasible: no root below the upper bound", "above")
            x = find_root(f, lo, hi)
            if abs(f(x)) > STEP_RESIDUAL_TOL * max(x, 1e-300):
                raise SolverError("forward step residual above tolerance")
    if system.variant is Variant.FUNDAMENTAL:
        eta1 = x / e.Gd - e.D
    else:
        eta1 = x / e.G - e.D * xi2n
    if eta1 < 0:
        raise PathInfeasible("path infeasible: next price would be negative", "below")
    return eta1, xi2n


def extend_backward(P_next: float, a_t: float, b_next: float, D_next: float,
                    kernel: UtilityKernel) -> float:
    """Price P_t in (0, a_t) that makes (P_t, P_next) satisfy the Euler equation.

    g(P) = (P_next + D_next) / rho(a_t - P, b_next + P_next + D_next) - P is
    strictly decreasing, positive near 0 and negative near a_t.
    """
    if not P_next > 0:
        raise DomainError(f"P_next must be positive, got {P_next!r}")
    if not (a_t > 0 and b_next >= 0 and D_next >= 0):
        raise DomainError("need a_t > 0, b_next >= 0, D_next >= 0")
    payoff = P_next + D_next
    z = b_next + payoff

    def g(P):
        return payoff / mrs_ratio(kernel, a_t - P, z) - P

    return find_root(g, 0.0, a_t * (1 - 2.0 ** -52))


def backward_step(system: DetrendedSystem, eta1: float, xi2: float) -> float:
    """xi1 at a date with auxiliary state xi2, given next period's eta1."""
    e = system.econ
    if system.variant is Variant.FUNDAMENTAL:
        if xi2 == 0:
            der = system.kernel.evaluate(e.a, e.G * e.b)
            return e.Gd * (eta1 + e.D) * der.U_z / der.U_y
        P = extend_backward(e.Gd * eta1 * xi2, e.a, e.G * e.b, e.Gd * e.D * xi2, system.kernel)
        return P / xi2
    eta2 = system.contraction * xi2
    return extend_backward(e.G * eta1, e.a, e.G * e.b, e.G * e.D * eta2, system.kernel)


def numerical_jacobian(system: DetrendedSystem, xi, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of forward_step at xi."""
    xi = np.asarray(xi, dtype=float)
    if h is None:
        h = 1e-5 * max(abs(xi[0]), 1e-3)
    jac = np.empty((2, 2))
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h
        up = np.array(forward_step(system, xi + dx))
        dn = np.array(forward_step(system, xi - dx))
        jac[:, j] = (up - dn) / (2 * h)
    return jac


def default_t0(system: DetrendedSystem, report: SteadyStateReport) -> int:
    """Smallest t with xi2(t) <= 0.05 min(1, xi1*/max(D, 1))."""
    target = 0.05 * min(1.0, report.xi1_star / max(system.econ.D, 1.0))
    return max(0, math.ceil(math.log(target) / math.log(system.contraction)))


def default_tube(system: DetrendedSystem, report: SteadyStateReport) -> float:
    radius = 0.5 * report.xi1_star
    if system.variant is Variant.BUBBLY:
        radius = max(radius, 1e-3 * system.econ.a)
    return radius


@dataclass(frozen=True)
class StablePath:
    variant: Variant
    xi1: np.ndarray = field(repr=False)
    xi2: np.ndarray = field(repr=False)
    prices: TrendedPath = field(repr=False)
    dividends: TrendedPath = field(repr=False)
    report: SteadyStateReport
    anchor: int
    bisections: int
    euler_residuals: np.ndarray = field(repr=False)
    verdict: BubbleVerdict
    flags: dict

    @property
    def max_euler_residual(self) -> float:
        return float(np.max(self.euler_residuals)) if self.euler_residuals.size else 0.0


def _escape(system, xi1, xi2, center, radius, max_steps) -> int:
    """+1 if the forward orbit leaves the tube above, -1 below, 0 if it stays."""
    state = (xi1, xi2)
    for _ in range(max_steps):
        if state[0] > center + radius:
            return 1
        if state[0] < center - radius:
            return -1
        try:
            state = forward_step(system, state)
        except PathInfeasible as exc:
            return 1 if exc.direction == "above" else -1
    return 0


def shoot(system: DetrendedSystem, report: SteadyStateReport, xi2: float, *,
          tube_radius: float | None = None, max_steps: int | None = None) -> tuple[float, int]:
    """Point (xi1, xi2) on the local stable manifold, by bisection on xi1.

    Returns the point and the number of bisection steps used.
    """
    if xi2 == 0:
        return report.xi1_star, 0
    center = report.xi1_star
    radius = default_tube(system, report) if tube_radius is None else tube_radius
    lam = abs(report.lambda1)
    if max_steps is None:
        scale = max(center, radius)
        max_steps = math.ceil(math.log(radius / (1e-17 * scale)) / math.log(lam)) + 100
        max_steps = min(max_steps, 100_000)
    guess = center + report.slope * xi2
    lo, hi = max(guess - radius, 0.0), guess + radius
    sign = 1 if report.lambda1 > 0 else -1
    if (_escape(system, lo, xi2, center, radius, max_steps) != -sign
            or _escape(system, hi, xi2, center, radius, max_steps) != sign):
        raise SolverError("stable manifold not found in bracket")
    mid = 0.5 * (lo + hi)
    n = 0
    for n in range(1, MAX_BISECTIONS + 1):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        s = _escape(system, mid, xi2, center, radius, max_steps)
        if s == 0:
            break
        if s == sign:
            hi = mid
        else:
            lo = mid
    return mid, n


def stable_path(system: DetrendedSystem, t0: int | None = None, horizon: int = 400, *,
                tube_radius: float | None = None, margin: float = DEFAULT_MARGIN) -> StablePath:
    """Equilibrium converging to the steady state, dates 0..horizon.

    The manifold is located by shooting at anchor = max(t0, horizon) and the
    path is carried back to date 0 with extend_backward. Backward iteration is
    the stable direction, so anchoring late keeps forward error growth out of
    the emitted path.
    """
    if horizon < 2:
        raise DomainError("horizon must be at least 2")
    report = linearize(system, steady_state(system))
    if not report.exists:
        raise RegimeError(f"{system.variant} steady state does not exist")
    if not report.saddle:
        raise RegimeError(
            f"not a saddle: lambda1={report.lambda1!r}, lambda2={report.lambda2!r}")
    if report.flags.get("resonant"):
        raise RegimeError("resonant eigenvalue n/d = +-1")
    if t0 is None:
        t0 = default_t0(system, report)
    anchor = max(int(t0), horizon)
    xi2 = system.xi2(np.arange(anchor + 1))
    xi1 = np.empty(anchor + 1)
    xi1[anchor], n = shoot(system, report, float(xi2[anchor]), tube_radius=tube_radius)
    for t in range(anchor - 1, -1, -1):
        xi1[t] = backward_step(system, xi1[t + 1], float(xi2[t]))
    xi1, xi2 = xi1[: horizon + 1], xi2[: horizon + 1]
    resid = np.array([system.euler_residual((xi1[t], xi2[t]), (xi1[t + 1], xi2[t + 1]))
                      for t in range(horizon)])
    e = system.econ
    prices = TrendedPath(system.trend, xi1)
    dividends = TrendedPath(e.Gd, np.full(horizon + 1, float(e.D)))
    verdict = detect_bubble(prices, dividends, margin)
    xi1.setflags(write=False)
    xi2.setflags(write=False)
    flags = {"uniqueness_not_guaranteed": bool(report.flags.get("uniqueness_not_guaranteed"))}
    return StablePath(system.variant, xi1, xi2, prices, dividends, report, anchor, n,
                      resid, verdict, flags)


@dataclass(frozen=True)
class Witness:
    xi1: np.ndarray = field(repr=False)
    prices: TrendedPath = field(repr=False)
    verdict: BubbleVerdict
    euler_residuals: np.ndarray = field(repr=False)


def continuum_witnesses(econ: GrowthEconomy, kernel: UtilityKernel, count: int = 5,
                        horizon: int = 400, margin: float = DEFAULT_MARGIN) -> list[Witness]:
    """Finitely many members of the equilibrium continuum in the coexistence region.

    Each starts from a date-0 price strictly between the fundamental and the
    bubbly saddle-path prices and follows the bubbly system forward; in units
    of G^t the price shrinks to zero while the dividend-yield sum converges.
    """
    regime = classify_regime(econ, kernel)
    if regime.regime is not Regime.COEXISTENCE:
        raise RegimeError(f"witnesses need the coexistence region, got {regime.regime}")
    fund = stable_path(DetrendedSystem(Variant.FUNDAMENTAL, econ, kernel), horizon=horizon)
    bub_sys = DetrendedSystem(Variant.BUBBLY, econ, kernel)
    bub = stable_path(bub_sys, horizon=horizon)
    lo, hi = fund.xi1[0], bub.xi1[0]
    out = []
    for frac in np.linspace(0, 1, count + 2)[1:-1]:
        xi1 = np.empty(horizon + 1)
        xi1[0] = lo + frac * (hi - lo)
        xi2 = bub_sys.xi2(np.arange(horizon + 1))
        for t in range(horizon):
            xi1[t + 1] = forward_step(bub_sys, (xi1[t], xi2[t]))[0]
        resid = np.array([bub_sys.euler_residual((xi1[t], xi2[t]), (xi1[t + 1], xi2[t + 1]))
                          for t in range(horizon)])
        prices = TrendedPath(econ.G, xi1)
        dividends = TrendedPath(econ.Gd, np.full(horizon + 1, float(econ.D)))
        out.append(Witness(xi1, prices, detect_bubble(prices, dividends, margin), resid))
    return out


@dataclass(frozen=True)
class RegimeReport:
    w: float
    w_f_star: float
    w_b_star: float
    regime: Regime
    fundamental_exists: bool
    bubbly_exists: bool
    autarky_rate: float
    necessity_condition: bool | None
    knife_edge: bool


def classify_regime(econ: GrowthEconomy, kernel: UtilityKernel) -> RegimeReport:
    """Place b/a relative to the thresholds w_f* < w_b*.

    ``autarky_rate`` is rho(a, G b); in the stationary case G = 1
    ``necessity_condition`` reports whether R < Gd < 1.
    """
    w_f = threshold_w(kernel, econ.G, econ.Gd)
    w_b = threshold_w(kernel, econ.G, econ.G)
    w = econ.w
    knife = min(abs(w - w_f), abs(w - w_b)) <= KNIFE_EDGE_TOL
    if knife:
        regime = Regime.KNIFE_EDGE
    elif w > w_b:
        regime = Regime.FUNDAMENTAL_ONLY
    elif w > w_f:
        regime = Regime.COEXISTENCE
    else:
        regime = Regime.BUBBLE_NECESSITY
    fund = _fundamental_steady_state(DetrendedSystem(Variant.FUNDAMENTAL, econ, kernel))
    R = mrs_ratio(kernel, econ.a, econ.G * econ.b) if econ.b > 0 else 0.0
    necessity = (R < econ.Gd < 1) if econ.G == 1 else None
    return RegimeReport(w, w_f, w_b, regime, fund.exists, w < w_b and not knife, R,
                        necessity, knife)


REGIME_COLUMNS = ("w", "G", "Gd", "w_f_star", "w_b_star", "regime",
                  "xi1_fund", "xi1_bub", "lambda1_fund", "lambda1_bub")


def regime_row(w: float, G: float, Gd: float, kernel: UtilityKernel,
               a: float = 1.0, D: float = 0.0029) -> dict:
    """One regime-map record; steady-state entries are nan where none exists."""
    econ = GrowthEconomy(a, w * a, G, D, Gd)
    rep = classify_regime(econ, kernel)
    fund = steady_state(DetrendedSystem(Variant.FUNDAMENTAL, econ, kernel))
    lam_f = linearize(DetrendedSystem(Variant.FUNDAMENTAL, econ, kernel), fund).lambda1 \
        if fund.exists else math.nan
    bsys = DetrendedSystem(Variant.BUBBLY, econ, kernel)
    bub = steady_state(bsys)
    lam_b = math.nan
    if bub.exists and not bub.flags.get("singular_d"):
        lam_b = linearize(bsys, bub).lambda1
    return {
        "w": w, "G": G, "Gd": Gd,
        "w_f_star": rep.w_f_star, "w_b_star": rep.w_b_star,
        "regime": rep.regime.value,
        "xi1_fund": fund.xi1_star if fund.exists else math.nan,
        "xi1_bub": bub.xi1_star if bub.exists else math.nan,
        "lambda1_fund": lam_f, "lambda1_bub": lam_b,
    }
