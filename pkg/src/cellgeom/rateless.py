"""Closed-form curves and bounds for rateless transmission at constant
power: the constant-interference CCDF, the independent-thinning upper
bound (synchronous start), the space-time arrival variant (asynchronous
start), and the success-probability / rate metrics built from them.

Conventions used throughout:

* theta_t = 2^(K/t) - 1 is the SIR needed to decode K bits in t uses.
* The interferer packet time Tbar has the continuous CDF
  F(t) = 1 / cov(theta_t * min(1, mu/t)) on (0, N) plus an atom at N of
  mass 1 - F(N-) (transmissions are cut off at the delay limit).
* mu is the scale parameter of F; the actual mean E[Tbar] =
  int_0^N (1 - F) dt is a different (larger) number, exposed as
  ThinningModel.mean_packet_time.  The success-probability bound uses
  E[Tbar]/N (= omega evaluated at N).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .params import AnalyticalParams, CcdfCurve, MetricsResult
from .specialfun import (
    NESTED_SPEC,
    QuadratureSpec,
    _gk15,
    hyp2f1_coverage,
    hyp2f1_mu_kernel,
    integrate_adaptive,
)

__all__ = [
    "ccdf_const_interference",
    "ps_rateless_ci",
    "mu_mean_packet_time",
    "interferer_ccdf",
    "ThinningModel",
    "thinning_model",
    "omega_sync",
    "omega_async",
    "ccdf_thinning_bound_sync",
    "ccdf_thinning_bound_async",
    "ps_rate_rateless_ci",
    "ps_rate_thinning_sync",
    "ps_rate_thinning_async",
    "rate_from_ccdf",
    "eta_moment_async",
    "ccdf_curve_ci",
    "ccdf_curve_thinning_sync",
    "ccdf_curve_thinning_async",
]

# one-sided quadrature accuracy for the cumulative interferer integrals
_W_SPEC = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10, max_subdivisions=400)


def ccdf_const_interference(t: float, p: AnalyticalParams) -> float:
    """P(T > t) when every interferer transmits forever (worst case)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if t >= p.N:
        return 0.0
    theta = p.theta_at(t)
    if math.isinf(theta):
        return 1.0
    return 1.0 - 1.0 / hyp2f1_coverage(theta, p.delta)


def ps_rateless_ci(p: AnalyticalParams) -> float:
    """Success probability under constant interference."""
    return 1.0 / hyp2f1_coverage(p.theta, p.delta)


@lru_cache(maxsize=128)
def mu_mean_packet_time(p: AnalyticalParams) -> float:
    """Scale parameter mu of the interferer packet-time distribution:
    mu = int_0^N (1 - 2F1([1,d];1+d;-theta_t)) dt, in (0, N]."""
    def integrand(t):
        if t <= 0:
            return 1.0
        return 1.0 - hyp2f1_mu_kernel(p.theta_at(t), p.delta)
    return integrate_adaptive(integrand, 0.0, float(p.N), _W_SPEC)


def interferer_ccdf(t: float, mu: float, p: AnalyticalParams) -> float:
    """P(Tbar > t): continuous part of the interferer packet-time law,
    1 - 1/cov(theta_t * min(1, mu/t))."""
    if t <= 0:
        raise ValueError("t must be positive")
    if not (0 < mu <= p.N):
        raise ValueError("mu must lie in (0, N]")
    theta = p.theta_at(t)
    if math.isinf(theta):
        return 1.0
    return 1.0 - 1.0 / hyp2f1_coverage(theta * min(1.0, mu / t), p.delta)


class ThinningModel:
    """Independent-thinning surrogate for interferer activity.

    Carries mu (the CDF scale parameter), the interferer packet-time
    distribution, and the activity factor omega.  The cumulative
    integral W(t) = int_0^t P(Tbar > v) dv is tabulated once on a
    half-unit knot grid (with a knot at the min(1, mu/t) kink) so that
    omega(t) = W(t)/t costs one quadrature panel at any t.

    mode is 'synchronous' (omega_fn varies with t) or 'asynchronous'
    (omega_fn is the constant omega_N).
    """

    def __init__(self, p: AnalyticalParams, mode: str = "synchronous"):
        if mode not in ("synchronous", "asynchronous"):
            raise ValueError(f"unknown mode {mode!r}")
        self.params = p
        self.mode = mode
        self.mu = mu_mean_packet_time(p)
        knots = np.arange(0.0, p.N + 0.25, 0.5)
        if not np.any(np.isclose(knots, self.mu)):
            knots = np.sort(np.append(knots, self.mu))
        self._knots = knots
        w = np.zeros_like(knots)
        for i in range(1, knots.size):
            w[i] = w[i - 1] + self._chunk(knots[i - 1], knots[i])
        self._w = w

    def ccdf(self, t: float) -> float:
        """P(Tbar > t), continuous part."""
        return interferer_ccdf(t, self.mu, self.params)

    def cdf(self, t: float) -> float:
        """F(t) = P(Tbar <= t), continuous part (excluding the atom at N)."""
        return 1.0 - self.ccdf(t)

    def _chunk(self, a: float, b: float) -> float:
        val, err = _gk15(self.ccdf, a, b)
        if err > 1e-10:
            val = integrate_adaptive(self.ccdf, a, b, _W_SPEC)
        return val

    def cumulative(self, t: float) -> float:
        """W(t) = int_0^t P(Tbar > v) dv."""
        if t <= 0:
            return 0.0
        t = min(float(t), float(self.params.N))
        i = int(np.searchsorted(self._knots, t, side="right")) - 1
        base = self._w[i]
        if t > self._knots[i]:
            base += self._chunk(self._knots[i], t)
        return float(base)

    def omega(self, t: float) -> float:
        """Mean interferer activity over (0, t]: E[min(1, Tbar/t)]."""
        if t <= 0:
            raise ValueError("t must be positive")
        return self.cumulative(t) / min(float(t), float(self.params.N))

    @property
    def omega_N(self) -> float:
        """Constant activity factor of the asynchronous model: E[Tbar]/N."""
        return float(self._w[-1]) / float(self.params.N)

    @property
    def mean_packet_time(self) -> float:
        """E[Tbar] = int_0^N (1 - F) dt, with the atom at N included."""
        return float(self._w[-1])

    def omega_fn(self, t: float) -> float:
        if self.mode == "asynchronous":
            return self.omega_N
        return self.omega(t)

    def sample_packet_times(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw i.i.d. interferer packet times from F (atom at N included)
        by inverse transform on the knot grid."""
        n = float(self.params.N)
        ts = self._knots[1:]
        fs = np.array([self.cdf(float(t)) for t in ts])
        keep = fs > 1e-15
        ts, fs = ts[keep], fs[keep]
        u = rng.random(size)
        out = np.interp(u, fs, ts, left=ts[0] if ts.size else n, right=n)
        if fs.size:
            out[u > fs[-1]] = n
        else:
            out[:] = n
        return out


@lru_cache(maxsize=32)
def _sync_model(p: AnalyticalParams) -> ThinningModel:
    return ThinningModel(p, "synchronous")


def thinning_model(p: AnalyticalParams, mode: str = "synchronous") -> ThinningModel:
    if mode == "synchronous":
        return _sync_model(p)
    m = ThinningModel.__new__(ThinningModel)
    m.__dict__.update(_sync_model(p).__dict__)
    m.mode = "asynchronous"
    return m


def omega_sync(t: float, model: ThinningModel) -> float:
    """Activity factor omega(t) = (1/t) int_0^t P(Tbar > v) dv."""
    return model.omega(t)


def omega_async(p: AnalyticalParams, model: Optional[ThinningModel] = None) -> float:
    """Constant activity factor omega_N = E[Tbar]/N of the space-time
    arrival model; equals omega(N) of the synchronous model."""
    model = model or _sync_model(p)
    return model.omega_N


def _bound_value(t: float, p: AnalyticalParams, omega: float) -> float:
    theta = p.theta_at(t)
    if math.isinf(theta):
        return 1.0
    return 1.0 - 1.0 / hyp2f1_coverage(omega * theta, p.delta)


def ccdf_thinning_bound_sync(t: float, p: AnalyticalParams,
                             model: Optional[ThinningModel] = None) -> float:
    """Upper bound on P(T > t) under synchronous starts:
    1 - 1/cov(omega(t) * theta_t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if t >= p.N:
        return 0.0
    model = model or _sync_model(p)
    return _bound_value(t, p, model.omega(t))


def ccdf_thinning_bound_async(t: float, p: AnalyticalParams,
                              model: Optional[ThinningModel] = None) -> float:
    """Upper bound on P(T > t) under space-time (asynchronous) arrivals:
    1 - 1/cov(omega_N * theta_t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if t >= p.N:
        return 0.0
    model = model or _sync_model(p)
    return _bound_value(t, p, model.omega_N)


def rate_from_ccdf(ccdf: CcdfCurve, p: AnalyticalParams, ps: float) -> MetricsResult:
    """Rate = K * ps / int_0^N P(T > t) dt.

    Analytic curves (those carrying `func`) are integrated by adaptive
    quadrature; empirical grids use the trapezoid rule plus the exact
    leading strip (P(T > t) = 1 below the first grid time, since a packet
    occupies at least one channel use).  The denominator is floored at
    one channel use, which also guards degenerate all-zero curves.
    """
    if not (-1e-12 <= ps <= 1 + 1e-12):
        raise ValueError("ps must lie in [0, 1]")
    N = float(p.N)
    if ccdf.func is not None:
        denom = integrate_adaptive(ccdf.func, 0.0, N, NESTED_SPEC)
    else:
        grid = ccdf.grid
        vals = ccdf.values
        denom = float(np.trapezoid(vals, grid)) + float(grid[0])
    denom = max(denom, 1.0)
    return MetricsResult(ps=min(max(ps, 0.0), 1.0), rate=p.K * ps / denom)


def ps_rate_rateless_ci(p: AnalyticalParams) -> MetricsResult:
    """Success probability and rate under constant interference."""
    ps = ps_rateless_ci(p)
    return rate_from_ccdf(ccdf_curve_ci(p), p, ps)


def ps_rate_thinning_sync(p: AnalyticalParams) -> MetricsResult:
    """Lower bound on success probability and rate under the synchronous
    thinning model: ps = 1/cov(theta * E[Tbar]/N), rate from the bound
    curve (an upper bound on E[T], hence a rate lower bound)."""
    model = _sync_model(p)
    ps = 1.0 / hyp2f1_coverage(p.theta * model.omega_N, p.delta)
    return rate_from_ccdf(ccdf_curve_thinning_sync(p), p, ps)


def ps_rate_thinning_async(p: AnalyticalParams) -> MetricsResult:
    """Same metrics for the asynchronous (space-time arrival) bound."""
    model = _sync_model(p)
    ps = 1.0 / hyp2f1_coverage(p.theta * model.omega_N, p.delta)
    return rate_from_ccdf(ccdf_curve_thinning_async(p), p, ps)


def _default_grid(p: AnalyticalParams) -> np.ndarray:
    return np.arange(1.0, p.N + 1.0)


def ccdf_curve_ci(p: AnalyticalParams, grid=None) -> CcdfCurve:
    grid = _default_grid(p) if grid is None else np.asarray(grid, float)
    f = lambda t: ccdf_const_interference(t, p) if t > 0 else 1.0
    return CcdfCurve(grid, np.array([f(t) for t in grid]), "exact", func=f)


def ccdf_curve_thinning_sync(p: AnalyticalParams, grid=None) -> CcdfCurve:
    grid = _default_grid(p) if grid is None else np.asarray(grid, float)
    model = _sync_model(p)
    f = lambda t: ccdf_thinning_bound_sync(t, p, model) if t > 0 else 1.0
    return CcdfCurve(grid, np.array([f(t) for t in grid]), "upper-bound", func=f)


def ccdf_curve_thinning_async(p: AnalyticalParams, grid=None) -> CcdfCurve:
    grid = _default_grid(p) if grid is None else np.asarray(grid, float)
    model = _sync_model(p)
    f = lambda t: ccdf_thinning_bound_async(t, p, model) if t > 0 else 1.0
    return CcdfCurve(grid, np.array([f(t) for t in grid]), "upper-bound", func=f)


def eta_moment_async(epsilon: float, t: float, p: AnalyticalParams,
                     cdf: Optional[Callable[[float], float]] = None) -> float:
    """Fractional moment E[eta(t)^epsilon] of the averaged activity of a
    space-time interferer, 0 < epsilon <= 1:

        (1/(N t^eps)) * [ t * I1 + c * I2 + t^eps * I3 + c * t^(1+eps) * I4 ]

    with c = (1-eps)/(1+eps) and the four Stieltjes integrals against the
    packet-time law dF: I1 = int_0^t v^eps dF, I2 = int_0^t v^(1+eps) dF,
    I3 = int_t^N v dF, I4 = int_t^N dF.  They are computed by parts
    against the continuous CDF; the atom of mass 1 - F(N-) at v = N is
    handled analytically.  At epsilon = 1 the expression collapses to
    E[Tbar]/N.

    `cdf` overrides the continuous CDF (e.g. a constant 0 models the
    degenerate packet time Tbar = N).
    """
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if not (0.0 < t <= p.N):
        raise ValueError("t must lie in (0, N]")
    model = _sync_model(p)
    F = cdf if cdf is not None else model.cdf
    N = float(p.N)
    t = float(t)
    eps = float(epsilon)
    Ft = F(t)

    def q(f, a, b):
        return integrate_adaptive(f, a, b, NESTED_SPEC) if b > a else 0.0

    # integration by parts: int_0^t g dF = g(t)F(t) - int_0^t g' F
    i1 = t**eps * Ft - eps * q(lambda v: v ** (eps - 1.0) * F(v) if v > 0 else 0.0, 0.0, t)
    i2 = t ** (1.0 + eps) * Ft - (1.0 + eps) * q(lambda v: v**eps * F(v), 0.0, t)
    # upper integrals include the atom at N
    i3 = N - t * Ft - q(F, t, N)
    i4 = 1.0 - Ft
    c = (1.0 - eps) / (1.0 + eps)
    bracket = t * i1 + c * i2 + t**eps * i3 + c * t ** (1.0 + eps) * i4
    return bracket / (N * t**eps)
