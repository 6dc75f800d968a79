"""Success probability of fixed-rate transmission under the four
power-adaptation policies, plus the shared SIR-threshold metrics.

All expressions give the typical-user probability that the one-shot
SIR exceeds theta = 2^(K/N) - 1; the rate is then (K/N) * ps since a
fixed-rate packet always occupies N channel uses.
"""

from __future__ import annotations

import math
from typing import Union

from .params import AnalyticalParams, MetricsResult, PowerPolicy, SirThreshold
from .specialfun import (
    QuadratureSpec,
    exp_integral_e1,
    h_interference,
    hyp2f1_coverage,
    integrate_adaptive,
)

__all__ = [
    "transmission_probability",
    "ps_fpc",
    "ps_pathloss_threshold",
    "ps_fading_threshold",
    "ps_fading_tci",
    "ps_fixed_rate",
    "fixed_rate_metrics",
]

# nested-quadrature accuracy for the triple integral
_FPC_SPEC = QuadratureSpec(abs_tol=1e-7, rel_tol=1e-7, max_subdivisions=500)
# exponential-weight truncation: tail mass below 1e-12
_EXP_TRUNC = -math.log(1e-12)

Theta = Union[float, SirThreshold]


def transmission_probability(policy: PowerPolicy, p: AnalyticalParams) -> float:
    """P(A): probability the gating event allows transmission."""
    if policy.kind == "constant":
        return 1.0
    if policy.kind in ("pathloss-fpc", "pathloss-threshold"):
        if policy.beta == 0.0:
            return 1.0
        return 1.0 - math.exp(-math.pi * p.lam / policy.beta**p.delta)
    # fading kinds: |h|^2 ~ Exp(1) exceeds beta
    return math.exp(-policy.beta)


def _require_kind(policy: PowerPolicy, kind: str):
    if policy.kind != kind:
        raise ValueError(f"policy kind {policy.kind!r}, expected {kind!r}")


def ps_fpc(theta: Theta, policy: PowerPolicy, p: AnalyticalParams) -> float:
    """Success probability under path-loss fractional power control
    (power rho * D^(tau*alpha), gated on D^-alpha >= beta):

        ps = int_0^Zmax exp(-z J(theta, z)) e^-z dz,
        J   = [d*theta/(1-d)] int_0^1 inner(theta u^(1/(1-d)), z) du,
        inner(x, z) = int_0^Wmax e^-w / (x + (w/z)^(-tau/d)) dw,

    with Zmax = Wmax = pi*lam/beta^d (truncated at exp-tail 1e-12 when
    beta = 0).  The outer integral is taken in the variable s = e^-z.
    The u-substitution absorbs the x^-d endpoint singularity; the
    w-substitution folds the z e^-zy weight into a fixed interval.
    """
    _require_kind(policy, "pathloss-fpc")
    if policy.tau <= 0:
        raise ValueError("ps_fpc needs tau > 0; tau = 0 is ps_pathloss_threshold")
    theta = float(theta)
    if theta == 0.0:
        return transmission_probability(policy, p)
    d = p.delta
    tau_d = policy.tau / d
    cap = math.pi * p.lam / policy.beta**d if policy.beta > 0 else math.inf
    wmax = min(cap, _EXP_TRUNC)
    zmax = min(cap, _EXP_TRUNC)
    pref = d * theta / (1.0 - d)
    inv_1md = 1.0 / (1.0 - d)

    def inner(x, z):
        return integrate_adaptive(
            lambda w: math.exp(-w) / (x + (w / z) ** (-tau_d)) if w > 0 else 0.0,
            0.0, wmax, _FPC_SPEC)

    def big_j(z):
        return pref * integrate_adaptive(
            lambda u: inner(theta * u**inv_1md, z) if u > 0 else 0.0,
            0.0, 1.0, _FPC_SPEC)

    def outer(s):
        z = -math.log(s)
        return math.exp(-z * big_j(z))

    return integrate_adaptive(outer, math.exp(-zmax), 1.0, _FPC_SPEC)


def ps_pathloss_threshold(theta: Theta, policy: PowerPolicy,
                          p: AnalyticalParams) -> float:
    """Success probability under path-loss gating at constant power
    (transmit only when D^-alpha >= beta)."""
    _require_kind(policy, "pathloss-threshold")
    theta = float(theta)
    H = h_interference(theta, p.delta)
    if policy.beta == 0.0:
        return 1.0 / (1.0 + H)
    ft = transmission_probability(policy, p)
    expo = math.pi * p.lam * (1.0 + H * ft) / policy.beta**p.delta
    return (1.0 - math.exp(-expo)) / (1.0 + H * ft)


def ps_fading_threshold(theta: Theta, policy: PowerPolicy,
                        p: AnalyticalParams) -> float:
    """Success probability under fading gating at constant power
    (transmit only when |h|^2 >= beta); exact at beta = 0."""
    _require_kind(policy, "fading-threshold")
    theta = float(theta)
    beta = policy.beta
    if beta == 0.0:
        return 1.0 / hyp2f1_coverage(theta, p.delta)
    eb = math.exp(beta)

    def fcal(x):
        if math.isinf(x):
            return 0.0
        return eb / (eb - 1.0 + hyp2f1_coverage(x, p.delta))

    ft = fcal(theta)
    return ft + fcal(theta / beta) * (math.exp(-beta) - ft)


def _expy_e1(y: float, beta: float) -> float:
    """e^y * E1(beta + y), stable for large y via the asymptotic series."""
    x = beta + y
    if x > 500.0:
        # e^x E1(x) ~ (1/x)(1 - 1/x + 2/x^2 - 6/x^3)
        inv = 1.0 / x
        return math.exp(-beta) * inv * (1.0 - inv * (1.0 - inv * (2.0 - 6.0 * inv)))
    return math.exp(y) * exp_integral_e1(x)


def ps_fading_tci(theta: Theta, policy: PowerPolicy,
                  p: AnalyticalParams) -> float:
    """Success probability under truncated channel inversion on fading
    (power rho/|h|^2 when |h|^2 >= beta): ps = e^-beta / (1 + G(theta)),
    G = [d*theta/(1-d)] int_0^1 e^y E1(beta + y) du at y = theta u^(1/(1-d)).
    The e^-beta factor is the truncation loss; exact at beta = 0."""
    _require_kind(policy, "fading-tci")
    theta = float(theta)
    beta = policy.beta
    if theta == 0.0:
        return math.exp(-beta)
    d = p.delta
    inv_1md = 1.0 / (1.0 - d)

    def integrand(u):
        if u <= 0.0:
            return 0.0  # integrable log endpoint at beta = 0; never sampled
        return _expy_e1(theta * u**inv_1md, beta)

    g = d * theta / (1.0 - d) * integrate_adaptive(integrand, 0.0, 1.0, _FPC_SPEC)
    return math.exp(-beta) / (1.0 + g)


def ps_fixed_rate(policy: PowerPolicy, p: AnalyticalParams,
                  theta: Theta = None) -> float:
    """Dispatch the per-policy success probability at theta (default
    2^(K/N)-1).  Constant power is the beta = 0 coverage value."""
    theta = p.theta if theta is None else float(theta)
    if policy.kind == "constant":
        return 1.0 / hyp2f1_coverage(theta, p.delta)
    if policy.kind == "pathloss-fpc":
        return ps_fpc(theta, policy, p)
    if policy.kind == "pathloss-threshold":
        return ps_pathloss_threshold(theta, policy, p)
    if policy.kind == "fading-threshold":
        return ps_fading_threshold(theta, policy, p)
    return ps_fading_tci(theta, policy, p)


def fixed_rate_metrics(ps: float, p: AnalyticalParams) -> MetricsResult:
    """Fixed-rate rate: (K/N) * ps; the packet always spends N uses."""
    if not (-1e-12 <= ps <= 1 + 1e-12):
        raise ValueError("ps must lie in [0, 1]")
    ps = min(max(ps, 0.0), 1.0)
    return MetricsResult(ps=ps, rate=p.K / p.N * ps)
