"""Domain primitives: utility kernels, growth economies, trended series, verdicts."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class RegimeError(ValueError):
    """Raised when parameters violate the hypothesis a constructor relies on."""


class SolverError(RuntimeError):
    """Raised when a numerical procedure cannot produce a result."""


class PathInfeasible(SolverError):
    """A forward step has no root with positive consumption and non-negative price.

    ``direction`` is ``"above"`` when the next price would have to explode and
    ``"below"`` when it would have to turn negative.
    """

    def __init__(self, message: str, direction: str):
        super().__init__(message)
        self.direction = direction


class UtilityDerivatives(NamedTuple):
    U: float
    U_y: float
    U_z: float
    U_yy: float
    U_yz: float
    U_zz: float


def _check_positive(y: float, z: float) -> None:
    if not (y > 0 and z > 0):
        raise DomainError(f"consumption must be positive, got y={y!r}, z={z!r}")


@dataclass(frozen=True)
class CobbDouglas:
    """U(y, z) = y**(1 - beta) * z**beta.

    Ordinally equivalent to (1 - beta) log y + beta log z and homogeneous of
    degree one, so it stands in for log utility in the two-period models.
    """

    beta: float

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta!r}")

    @property
    def eps(self) -> float:
        return 1.0

    @property
    def inada_satisfied(self) -> bool:
        return True

    def value(self, y: float, z: float) -> float:
        _check_positive(y, z)
        return y ** (1 - self.beta) * z ** self.beta

    def evaluate(self, y: float, z: float) -> UtilityDerivatives:
        U = self.value(y, z)
        return _homothetic_derivatives(U, y, z, 1 - self.beta, self.beta, 1.0)

    def mrs(self, y: float, z: float) -> float:
        _check_positive(y, z)
        return (1 - self.beta) / self.beta * (z / y)


@dataclass(frozen=True)
class CES:
    """U(y, z) = ((1 - beta) y**s + beta z**s)**(1/s) with s = (eps - 1)/eps.

    ``eps`` is the intertemporal elasticity of substitution. ``eps == 1`` is
    evaluated through the Cobb-Douglas formula rather than as a limit.
    """

    beta: float
    eps: float

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            # eps = inf is linear utility, which is not strictly concave
            raise DomainError(f"eps must be positive and finite, got {self.eps!r}")

    @property
    def inada_satisfied(self) -> bool:
        # U_y(0, z) = inf and U_z(y, 0) = inf hold iff eps >= 1
        return self.eps >= 1

    def value(self, y: float, z: float) -> float:
        _check_positive(y, z)
        if self.eps == 1:
            return y ** (1 - self.beta) * z ** self.beta
        s = (self.eps - 1) / self.eps
        # log of the inner sum, factored around its larger term: the direct
        # inner**(1/s) loses ~eps_mach/|s| as s -> 0
        a, b = s * math.log(y), s * math.log(z)
        m, o, w_o = (a, b, self.beta) if a >= b else (b, a, 1 - self.beta)
        log_inner = m + math.log1p(w_o * math.expm1(o - m))
        return math.exp(log_inner / s)

    def evaluate(self, y: float, z: float) -> UtilityDerivatives:
        U = self.value(y, z)
        return _homothetic_derivatives(U, y, z, 1 - self.beta, self.beta, self.eps)

    def mrs(self, y: float, z: float) -> float:
        _check_positive(y, z)
        if self.eps == 1:
            return (1 - self.beta) / self.beta * (z / y)
        return (1 - self.beta) / self.beta * (z / y) ** (1 / self.eps)


def _homothetic_derivatives(U, y, z, wy, wz, eps) -> UtilityDerivatives:
    # CES family: U_y = wy (U/y)^(1/eps), U_z = wz (U/z)^(1/eps); the second
    # partials follow from U_yz = U_y U_z / (eps U) and Euler's theorem.
    inv = 1.0 / eps
    U_y = wy * (U / y) ** inv
    U_z = wz * (U / z) ** inv
    U_yz = inv * U_y * U_z / U
    U_yy = -U_yz * z / y
    U_zz = -U_yz * y / z
    return UtilityDerivatives(U, U_y, U_z, U_yy, U_yz, U_zz)


UtilityKernel = CobbDouglas | CES


def utility_eval(kernel: UtilityKernel, y: float, z: float) -> UtilityDerivatives:
    """Value and exact first and second partials of ``kernel`` at (y, z)."""
    return kernel.evaluate(y, z)


def mrs_ratio(kernel: UtilityKernel, y: float, z: float) -> float:
    """Marginal-rate ratio U_y/U_z at (y, z); homogeneous of degree zero."""
    return kernel.mrs(y, z)


@dataclass(frozen=True)
class CRRAPeriodUtility:
    """Period utility c**(1-gamma)/(1-gamma), or log c when gamma == 1."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")

    def u(self, c: float) -> float:
        if c <= 0:
            raise DomainError(f"consumption must be positive, got {c!r}")
        if self.gamma == 1:
            return math.log(c)
        return c ** (1 - self.gamma) / (1 - self.gamma)

    def du(self, c: float) -> float:
        if c < 0:
            raise DomainError(f"consumption must be non-negative, got {c!r}")
        if c == 0:
            return math.inf
        return c ** -self.gamma

    def d2u(self, c: float) -> float:
        if c <= 0:
            raise DomainError(f"consumption must be positive, got {c!r}")
        return -self.gamma * c ** (-self.gamma - 1)


@dataclass(frozen=True)
class GrowthEconomy:
    """Endowments (a G^t, b G^t) for young and old, dividends D Gd^t."""

    a: float
    b: float
    G: float
    D: float
    Gd: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a!r}")
        if not self.b >= 0:
            raise DomainError(f"b must be non-negative, got {self.b!r}")
        if not self.G > 0:
            raise DomainError(f"G must be positive, got {self.G!r}")
        if not self.D > 0:
            raise DomainError(f"D must be positive, got {self.D!r}")
        if not 0 < self.Gd < self.G:
            raise DomainError(f"need 0 < Gd < G, got Gd={self.Gd!r}, G={self.G!r}")

    @property
    def w(self) -> float:
        """Old-to-young income ratio b/a."""
        return self.b / self.a


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TrendedPath:
    """A series stored as detrended levels x_t and a trend factor; value_t = x_t * growth**t."""

    growth: float
    levels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.growth > 0:
            raise DomainError(f"growth must be positive, got {self.growth!r}")
        levels = _frozen(self.levels)
        if levels.ndim != 1 or levels.size == 0:
            raise DomainError("levels must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(levels)):
            raise DomainError("levels must be finite")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_values(cls, values) -> TrendedPath:
        return cls(1.0, values)

    @classmethod
    def geometric(cls, level: float, growth: float, horizon: int) -> TrendedPath:
        return cls(growth, np.full(horizon + 1, float(level)))

    @property
    def horizon(self) -> int:
        return self.levels.size - 1

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.levels.size)

    def values(self) -> np.ndarray:
        with np.errstate(over="raise"):
            return self.levels * self.growth ** self.t

    def log_values(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.levels) + self.t * math.log(self.growth)

    def __len__(self) -> int:
        return self.levels.size

    def __getitem__(self, t: int) -> float:
        return float(self.levels[t] * self.growth ** t)

    def retrend(self, growth: float) -> TrendedPath:
        """Same represented values against a different trend factor."""
        ratio = math.log(self.growth) - math.log(growth)
        return TrendedPath(growth, self.levels * np.exp(self.t * ratio))

    def truncate(self, horizon: int) -> TrendedPath:
        return TrendedPath(self.growth, self.levels[: horizon + 1])


class Verdict(str, enum.Enum):
    FUNDAMENTAL = "Fundamental"
    BUBBLY = "Bubbly"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BubbleVerdict:
    """Outcome of the dividend-yield test on one price/dividend pair.

    ``partial_sum`` is sum_{t=1}^T D_t/P_t, ``tail_ratio`` the fitted limit of
    successive yield ratios, and ``tail_bound`` the geometric bound on the
    neglected tail (inf unless the verdict is Bubbly).
    """

    classification: Verdict
    partial_sum: float
    tail_ratio: float
    tail_bound: float
    margin: float
    horizon: int
    reason: str = ""

    @property
    def is_bubbly(self) -> bool:
        return self.classification is Verdict.BUBBLY

    def as_dict(self) -> dict:
        return {
            "class": self.classification.value,
            "partial_sum": self.partial_sum,
            "tail_ratio": self.tail_ratio,
            "tail_bound": self.tail_bound,
            "margin": self.margin,
            "horizon": self.horizon,
            "reason": self.reason,
        }


def as_path(series) -> TrendedPath:
    """Coerce arrays and sequences to a trend-free TrendedPath."""
    if isinstance(series, TrendedPath):
        return series
    return TrendedPath.from_values(series)
