"""Shared domain types: scalar parameter bundle, SIR threshold, power
policies, tabulated CCDF curves and metric results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "AnalyticalParams",
    "SirThreshold",
    "PowerPolicy",
    "CcdfCurve",
    "MetricsResult",
]

_LN2 = math.log(2.0)
# exp argument above which 2^x - 1 overflows double precision
_EXP_CAP = 700.0


@dataclass(frozen=True)
class AnalyticalParams:
    """Scalar parameters every closed-form expression consumes.

    lam    base-station density (per unit area)
    alpha  path-loss exponent, > 2
    K      information bits per packet
    N      delay constraint in channel uses (max packet time)
    """

    lam: float = 1.0
    alpha: float = 3.0
    K: float = 75.0
    N: int = 100

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.alpha > 2:
            raise ValueError("alpha must exceed 2 (delta = 2/alpha < 1)")
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ValueError("N must be a positive integer")

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha

    def theta_at(self, t: float) -> float:
        """SIR threshold 2^(K/t) - 1 for decoding K bits in t channel uses."""
        if t <= 0:
            raise ValueError("t must be positive")
        x = _LN2 * self.K / t
        if x > _EXP_CAP:
            return math.inf
        return math.expm1(x)

    @property
    def theta(self) -> float:
        """Fixed-rate SIR threshold 2^(K/N) - 1."""
        return self.theta_at(float(self.N))


@dataclass(frozen=True)
class SirThreshold:
    """SIR decoding threshold for fixed-rate transmission."""

    theta: float

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be >= 0")

    @classmethod
    def from_params(cls, p: AnalyticalParams) -> "SirThreshold":
        return cls(p.theta)

    def __float__(self) -> float:
        return float(self.theta)


_POLICY_KINDS = (
    "constant",
    "pathloss-fpc",
    "pathloss-threshold",
    "fading-threshold",
    "fading-tci",
)


@dataclass(frozen=True)
class PowerPolicy:
    """Transmit-power policy of every base station.

    kind     one of: constant, pathloss-fpc, pathloss-threshold,
             fading-threshold, fading-tci
    tau      path-loss compensation exponent in [0, 1] (pathloss-fpc)
    beta     gating threshold; path-loss units D^-alpha for the pathloss
             kinds, fading-power units |h|^2 for the fading kinds
    rho      nominal transmit power (normalized out of all SIR ratios)
    rho_max  maximum power; when given, beta is derived from it for the
             inversion kinds
    """

    kind: str
    tau: float = 0.0
    beta: float = 0.0
    rho: float = 1.0
    rho_max: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError("tau must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.rho_max is not None:
            if not self.rho_max >= self.rho:
                raise ValueError("rho_max must be >= rho")
            if self.kind == "pathloss-fpc":
                if self.tau == 0:
                    raise ValueError("pathloss-fpc with rho_max needs tau > 0")
                object.__setattr__(
                    self, "beta", (self.rho / self.rho_max) ** (1.0 / self.tau))
            elif self.kind == "fading-tci":
                object.__setattr__(self, "beta", self.rho / self.rho_max)

    # convenience constructors
    @classmethod
    def constant(cls, rho: float = 1.0) -> "PowerPolicy":
        return cls("constant", rho=rho)

    @classmethod
    def pathloss_fpc(cls, tau: float, beta: float = 0.0, rho: float = 1.0,
                     rho_max: Optional[float] = None) -> "PowerPolicy":
        return cls("pathloss-fpc", tau=tau, beta=beta, rho=rho, rho_max=rho_max)

    @classmethod
    def pathloss_threshold(cls, beta: float, rho: float = 1.0) -> "PowerPolicy":
        return cls("pathloss-threshold", beta=beta, rho=rho)

    @classmethod
    def fading_threshold(cls, beta: float, rho: float = 1.0) -> "PowerPolicy":
        return cls("fading-threshold", beta=beta, rho=rho)

    @classmethod
    def fading_tci(cls, beta: float = 0.0, rho: float = 1.0,
                   rho_max: Optional[float] = None) -> "PowerPolicy":
        return cls("fading-tci", beta=beta, rho=rho, rho_max=rho_max)


_CURVE_KINDS = ("exact", "upper-bound", "empirical")


@dataclass(frozen=True)
class CcdfCurve:
    """Tabulated packet-time CCDF t -> P(T > t) on an ascending grid.

    Analytic curves carry `func`, the underlying callable, so integrals
    over them can be taken by quadrature instead of the trapezoid rule.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str
    func: Optional[Callable[[float], float]] = field(
        default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.size == 0 or grid.shape != values.shape:
            raise ValueError("grid and values must be matching 1-D arrays")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly ascending")
        if grid[0] <= 0:
            raise ValueError("grid times must be positive")
        if np.any(values < -1e-9) or np.any(values > 1 + 1e-9):
            raise ValueError("CCDF values must lie in [0, 1]")
        if np.any(np.diff(values) > 1e-9):
            raise ValueError("CCDF values must be non-increasing")
        if self.kind not in _CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")


@dataclass(frozen=True)
class MetricsResult:
    """Success probability, rate (bits per channel use) and, for
    empirical inputs, the 95% confidence half-width of ps."""

    ps: float
    rate: float
    ci_halfwidth: Optional[float] = None

    def __post_init__(self):
        if not (-1e-12 <= self.ps <= 1 + 1e-12):
            raise ValueError("ps must lie in [0, 1]")
        if self.rate < 0:
            raise ValueError("rate must be >= 0")
