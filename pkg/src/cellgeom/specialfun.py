"""Numerical kernel: adaptive quadrature, the Gauss hypergeometric values
used by the coverage formulas, and the exponential integral E1.

The three hypergeometric families needed downstream are all evaluated
through one Euler-type integral

    B(theta, p) = int_0^1 du / (1 + theta * u^(1/p)),   0 < p < 1,

which equals 2F1([1, p]; 1+p; -theta).  With p = delta it is the
mu-kernel; with p = 1-delta it yields the interference factor
H(theta) = delta*theta/(1-delta) * B(theta, 1-delta) and the coverage
denominator 1 + H(theta) = 2F1([1, -delta]; 1-delta; -theta).

For theta > 1 the integrand has a sharp knee at u* = theta^-p, so the
integral is split there and each side is transformed to a smooth,
bounded integrand (values in (0, 1]); this keeps the evaluation accurate
for theta up to overflow scale (theta ~ 2^1000).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from scipy.special import exp1 as _scipy_exp1

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "integrate_adaptive",
    "hyp2f1_coverage",
    "hyp2f1_mu_kernel",
    "h_interference",
    "exp_integral_e1",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy contract for 1-D adaptive quadrature."""

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()
# nested integrals trade accuracy for cost
NESTED_SPEC = QuadratureSpec(abs_tol=1e-7, rel_tol=1e-7)
# internal spec for the hypergeometric kernels (cheap: smooth integrands)
_KERNEL_SPEC = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=400)


class QuadratureError(RuntimeError):
    """Raised when the subdivision budget is exhausted; carries the
    partial estimate and its error bound."""

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


# Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK dqk15).
_XGK = (
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
)
_WGK = (
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
)
_WG = (0.129484966168870, 0.279705391489277, 0.381830050505119,
       0.417959183673469)


def _gk15(f: Callable[[float], float], a: float, b: float):
    """One Gauss-Kronrod 7-15 panel: returns (K15, |K15-G7|)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = f(c)
    resk = _WGK[7] * fc
    resg = _WG[3] * fc
    for j in range(7):
        x = h * _XGK[j]
        fs = f(c - x) + f(c + x)
        resk += _WGK[j] * fs
        if j % 2 == 1:
            resg += _WG[j // 2] * fs
    return h * resk, h * abs(resk - resg)


def integrate_adaptive(f, a, b, spec: QuadratureSpec = DEFAULT_SPEC):
    """Adaptive Gauss-Kronrod quadrature of f on [a, b].

    Bisects the interval with the largest local error estimate first.
    Endpoint singularities of type x^-p, p < 1, converge because the
    GK nodes are interior (the endpoints are never evaluated) and the
    bisection marches geometrically into the singular corner.

    Raises QuadratureError with the partial estimate when the requested
    accuracy is not reached within spec.max_subdivisions bisections.
    """
    a = float(a)
    b = float(b)
    if a > b:
        raise ValueError(f"integration bounds reversed: [{a}, {b}]")
    if a == b:
        return 0.0
    val, err = _gk15(f, a, b)
    # heap of (-error, tiebreak, a, b, value, error)
    heap = [(-err, 0, a, b, val, err)]
    total_val, total_err = val, err
    frozen_val = 0.0  # panels too narrow to split further
    counter = 1
    min_width = 1e-14 * max(1.0, abs(a), abs(b))
    for _ in range(spec.max_subdivisions):
        if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total_val + frozen_val)):
            return total_val + frozen_val
        if not heap:
            return total_val + frozen_val
        _, _, pa, pb, pval, perr = heapq.heappop(heap)
        total_val -= pval
        total_err -= perr
        if pb - pa < min_width:
            # cannot be refined in double precision; accept as is
            frozen_val += pval
            continue
        pm = 0.5 * (pa + pb)
        v1, e1 = _gk15(f, pa, pm)
        v2, e2 = _gk15(f, pm, pb)
        heapq.heappush(heap, (-e1, counter, pa, pm, v1, e1))
        heapq.heappush(heap, (-e2, counter + 1, pm, pb, v2, e2))
        counter += 2
        total_val += v1 + v2
        total_err += e1 + e2
    if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total_val + frozen_val)):
        return total_val + frozen_val
    raise QuadratureError(
        f"quadrature did not converge after {spec.max_subdivisions} subdivisions "
        f"(estimate {total_val + frozen_val!r}, error bound {total_err:.3e})",
        total_val + frozen_val,
        total_err,
    )


def _check_domain(theta: float, delta: float):
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if theta < 0.0 or math.isnan(theta):
        raise ValueError(f"theta must be >= 0, got {theta}")


@lru_cache(maxsize=64)
def _plateau_integral(q: float) -> float:
    # int_0^1 ds / (1 + s^q), theta-independent piece of the split kernel
    return integrate_adaptive(lambda s: 1.0 / (1.0 + s**q), 0.0, 1.0, _KERNEL_SPEC)


def _base_kernel(theta: float, p: float, spec: QuadratureSpec = _KERNEL_SPEC) -> float:
    """B(theta, p) = int_0^1 du/(1 + theta u^(1/p)) = 2F1([1,p];1+p;-theta)."""
    if theta == 0.0:
        return 1.0
    if math.isinf(theta):
        return 0.0
    q = 1.0 / p
    if theta <= 1.0:
        return integrate_adaptive(lambda u: 1.0 / (1.0 + theta * u**q), 0.0, 1.0, spec)
    # split at the knee u* = theta^-p; both pieces rescale to smooth
    # integrands bounded in (0, 1]:
    #   [0, u*]:  u = u* s        ->  u* int_0^1 ds/(1+s^q)
    #   [u*, 1]:  u = u*/w, then w = v^(1/(q-1))
    #             ->  u*/(q-1) int_{u*^(q-1)}^1 dv/(1+v^(q/(q-1)))
    ustar = theta**(-p)
    qq = q / (q - 1.0)
    lo = ustar**(q - 1.0)
    tail = integrate_adaptive(lambda v: 1.0 / (1.0 + v**qq), lo, 1.0, spec)
    return ustar * (_plateau_integral(q) + tail / (q - 1.0))


def hyp2f1_mu_kernel(theta: float, delta: float) -> float:
    """2F1([1, delta]; 1+delta; -theta), in (0, 1], decreasing in theta."""
    _check_domain(theta, delta)
    return _base_kernel(theta, delta)


def h_interference(theta: float, delta: float) -> float:
    """Interference factor H(theta) = delta*theta/(1-delta) *
    2F1([1, 1-delta]; 2-delta; -theta), nonnegative and increasing."""
    _check_domain(theta, delta)
    if theta == 0.0:
        return 0.0
    if math.isinf(theta):
        return math.inf
    return delta * theta / (1.0 - delta) * _base_kernel(theta, 1.0 - delta)


def hyp2f1_coverage(theta: float, delta: float) -> float:
    """2F1([1, -delta]; 1-delta; -theta) = 1 + H(theta), >= 1.

    This is the coverage denominator: P(SIR > theta) = 1 / value for a
    Rayleigh-faded downlink with nearest-transmitter association.
    """
    return 1.0 + h_interference(theta, delta)


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) = int_x^inf e^-t/t dt, x > 0."""
    if not x > 0.0:
        raise ValueError(f"E1 requires x > 0, got {x}")
    return float(_scipy_exp1(x))
