"""Monte Carlo engine: Poisson networks on a torus, the coupled rateless
packet-time dynamics, constant-interference and fixed-rate trials, and
the asynchronous space-time arrival model.

Geometry notes.  All distances wrap around the window edges (torus
metric), including path loss to interferers.  Every base station serves
one user drawn uniformly in its Voronoi cell (batched rejection against
a periodic KD-tree).  Pooled typical-user statistics weight each user by
its cell's exact torus Voronoi area: equal-weight pooling of one user
per cell over-represents small cells and biases coverage upward by
~0.02-0.03 relative to the uniform-location statistics the closed forms
describe (measured at lam=1, S=60, alpha=3), while area weighting is
unbiased for them.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import Voronoi, cKDTree

from .params import AnalyticalParams, CcdfCurve, MetricsResult, PowerPolicy
from .rateless import rate_from_ccdf, thinning_model

__all__ = [
    "SimConfig",
    "NetworkRealization",
    "TrialOutcome",
    "DegenerateCellError",
    "sample_network",
    "simulate_rateless_tvi",
    "simulate_rateless_ci",
    "simulate_fixedrate",
    "simulate_rateless_async",
    "aggregate",
    "run_trials",
    "trial_rng",
]

_MODES = ("sync-tvi", "sync-ci", "fixed-rate", "async-rain")
# cap on the per-use rate when SIR is astronomically large but finite;
# zero accumulated interference decodes immediately (T = 1)
_RATE_CAP = 30.0
_REJECTION_CAP = 1_000_000


class DegenerateCellError(RuntimeError):
    """A Voronoi cell stayed empty after the rejection-sampling budget."""


@dataclass(frozen=True)
class SimConfig:
    side: float = 60.0
    lam: float = 1.0
    K: float = 75.0
    N: int = 100
    alpha: float = 3.0
    policy: PowerPolicy = field(default_factory=PowerPolicy.constant)
    mode: str = "sync-ci"
    lambda_s: Optional[float] = None  # async only; default lam/N
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.side > 0 and self.lam > 0):
            raise ValueError("side and lam must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.lam * self.side**2 < 10:
            warnings.warn("expected BS count below 10; statistics will be poor",
                          stacklevel=2)

    @property
    def params(self) -> AnalyticalParams:
        return AnalyticalParams(lam=self.lam, alpha=self.alpha, K=self.K, N=self.N)

    @property
    def rain_intensity(self) -> float:
        return self.lambda_s if self.lambda_s is not None else self.lam / self.N


@dataclass
class NetworkRealization:
    bs_positions: np.ndarray    # (n, 2)
    user_positions: np.ndarray  # (n, 2), user i served by BS i (its nearest)
    desired_fades: np.ndarray   # |h_ii|^2, Exp(1)
    cross_fades: np.ndarray     # (n, n), |g_ki|^2 from BS k to user i
    start_times: np.ndarray     # per-BS transmission start (0 in sync modes)
    cell_areas: np.ndarray      # torus Voronoi cell areas (pooling weights)
    side: float


@dataclass
class TrialOutcome:
    successes: np.ndarray
    packet_times: Optional[np.ndarray] = None   # rateless modes, clipped to N
    transmitted: Optional[np.ndarray] = None    # fixed-rate gating flags
    weights: Optional[np.ndarray] = None        # pooling weights (cell areas)


def torus_gaps(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    """Pairwise squared torus distances, shape (len(a), len(b))."""
    d2 = np.zeros((a.shape[0], b.shape[0]))
    for ax in (0, 1):
        d = np.abs(a[:, ax, None] - b[None, :, ax])
        np.minimum(d, side - d, out=d)
        d2 += d * d
    return d2


def _torus_voronoi_areas(bs: np.ndarray, side: float) -> np.ndarray:
    """Exact cell areas from the Voronoi diagram of the 3x3 tiling."""
    n = len(bs)
    shifts = np.array([[dx, dy] for dx in (-side, 0, side) for dy in (-side, 0, side)])
    vor = Voronoi((bs[None, :, :] + shifts[:, None, :]).reshape(-1, 2))
    base = 4 * n  # central copy: shift (0, 0) is index 4
    areas = np.empty(n)
    for i in range(n):
        poly = vor.vertices[vor.regions[vor.point_region[base + i]]]
        x, y = poly[:, 0], poly[:, 1]
        areas[i] = 0.5 * abs(np.dot(x, np.roll(y, 1)) - np.dot(y, np.roll(x, 1)))
    return areas


def _sample_users(bs: np.ndarray, side: float, rng: np.random.Generator) -> np.ndarray:
    """One user per cell, uniform in the cell: batched rejection.  The
    first uniform point whose nearest BS (torus metric) is the target
    cell is uniform in that cell."""
    n = len(bs)
    tree = cKDTree(bs, boxsize=side)
    users = np.empty((n, 2))
    filled = np.zeros(n, bool)
    spent = 0
    m = max(4 * n, 1024)
    while not filled.all():
        pts = rng.uniform(0.0, side, (m, 2))
        _, idx = tree.query(pts)
        uniq, first = np.unique(idx, return_index=True)
        take = ~filled[uniq]
        users[uniq[take]] = pts[first[take]]
        filled[uniq[take]] = True
        spent += m
        if spent > _REJECTION_CAP and not filled.all():
            raise DegenerateCellError(
                f"{int((~filled).sum())} cells empty after {spent} draws")
        m = min(2 * m, 2_000_000)
    return users


def sample_network(config: SimConfig, rng: np.random.Generator) -> NetworkRealization:
    """Draw one Poisson network: BS count ~ Poisson(lam*side^2), uniform
    positions, per-cell users, unit-mean exponential fades."""
    side = config.side
    n = 0
    for _ in range(200):
        n = int(rng.poisson(config.lam * side * side))
        if n >= 1:
            break
    if n < 1:
        raise DegenerateCellError("could not draw a non-empty network")
    bs = rng.uniform(0.0, side, (n, 2))
    users = _sample_users(bs, side, rng)
    desired = rng.exponential(1.0, n)
    cross = rng.exponential(1.0, (n, n))
    return NetworkRealization(
        bs_positions=bs,
        user_positions=users,
        desired_fades=desired,
        cross_fades=cross,
        start_times=np.zeros(n),
        cell_areas=_torus_voronoi_areas(bs, side),
        side=side,
    )


def _gain_matrix(net: NetworkRealization, alpha: float) -> np.ndarray:
    """M[k, i] = |g_ki|^2 * d(X_k, Y_i)^-alpha with zero diagonal."""
    d2 = torus_gaps(net.bs_positions, net.user_positions, net.side)
    np.fill_diagonal(d2, 1.0)  # avoid 0^-a; diagonal is zeroed below
    M = net.cross_fades * d2 ** (-alpha / 2.0)
    np.fill_diagonal(M, 0.0)
    return M


def _own_link(net: NetworkRealization, alpha: float):
    """Serving distances D_i and received-power factors |h|^2 D^-alpha."""
    gaps = np.abs(net.bs_positions - net.user_positions)
    np.minimum(gaps, net.side - gaps, out=gaps)
    D = np.sqrt((gaps * gaps).sum(axis=1))
    return D, net.desired_fades * D ** (-alpha)


def simulate_rateless_tvi(net: NetworkRealization, config: SimConfig,
                          forced_stop: Optional[np.ndarray] = None) -> TrialOutcome:
    """Chronological sweep of the coupled rateless dynamics.

    At integer step t every still-active user sees the interference of
    the base stations active during that step; the running average
    feeds the decode test t * log2(1 + S/Ihat) >= K.  Users decoding at
    step t silence their stations at the END of the step, so the update
    is order-independent.  Undecoded users are censored at N.

    forced_stop (diagnostic): per-BS step after which the station stops
    interfering regardless of its own decode state.
    """
    K, N = config.K, config.N
    M = _gain_matrix(net, config.alpha)
    _, sig = _own_link(net, config.alpha)
    n = len(sig)
    T = np.full(n, N + 1, dtype=np.int64)
    S = np.zeros(n)
    I_cur = M.sum(axis=0)
    bs_active = np.ones(n, bool)
    undecoded = np.ones(n, bool)
    for t in range(1, N + 1):
        S += I_cur
        Ihat = S / t
        with np.errstate(divide="ignore", over="ignore"):
            C = np.minimum(np.log2(1.0 + sig / Ihat), _RATE_CAP)
        dec = undecoded & ((t * C >= K) | (Ihat == 0.0))
        if dec.any():
            T[dec] = t
            undecoded &= ~dec
        stop = dec.copy()
        if forced_stop is not None:
            stop |= bs_active & (forced_stop <= t)
        stop &= bs_active
        if stop.any():
            bs_active &= ~stop
            I_cur -= M[stop, :].sum(axis=0)
        if not undecoded.any() and forced_stop is None:
            break
    return TrialOutcome(
        successes=T <= N,
        packet_times=np.minimum(T, N),
        weights=net.cell_areas,
    )


def simulate_rateless_ci(net: NetworkRealization, config: SimConfig) -> TrialOutcome:
    """Rateless decode times when every interferer transmits forever:
    T = ceil(K / log2(1 + SIR)) with the static SIR, censored at N."""
    K, N = config.K, config.N
    M = _gain_matrix(net, config.alpha)
    _, sig = _own_link(net, config.alpha)
    I_tot = M.sum(axis=0)
    with np.errstate(divide="ignore", over="ignore"):
        C = np.minimum(np.log2(1.0 + sig / I_tot), _RATE_CAP)
        That = np.where(I_tot == 0.0, 1.0, np.ceil(K / C))
    return TrialOutcome(
        successes=That <= N,
        packet_times=np.minimum(That, N).astype(np.int64),
        weights=net.cell_areas,
    )


def simulate_fixedrate(net: NetworkRealization, config: SimConfig) -> TrialOutcome:
    """One-shot fixed-rate trial: every station derives its power from
    its own link per the policy, gated stations are silent and their
    users fail; success = transmitted and SIR > 2^(K/N) - 1."""
    p = config.params
    theta = p.theta
    alpha = config.alpha
    policy = config.policy
    D_own, sig_const = _own_link(net, alpha)
    h_own = net.desired_fades
    kind = policy.kind

    if kind == "constant":
        transmit = np.ones(len(D_own), bool)
        gamma = np.full(len(D_own), policy.rho)
    elif kind in ("pathloss-fpc", "pathloss-threshold"):
        transmit = D_own ** (-alpha) >= policy.beta
        tau = policy.tau if kind == "pathloss-fpc" else 0.0
        gamma = np.where(transmit, policy.rho * D_own ** (tau * alpha), 0.0)
    elif kind == "fading-threshold":
        transmit = h_own >= policy.beta
        gamma = np.where(transmit, policy.rho, 0.0)
    else:  # fading-tci
        transmit = h_own >= policy.beta
        with np.errstate(divide="ignore"):
            gamma = np.where(transmit, policy.rho / h_own, 0.0)

    M = _gain_matrix(net, alpha)
    I_tot = (gamma * transmit) @ M
    signal = gamma * sig_const  # = gamma * |h|^2 * D^-alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        sir = np.where(I_tot > 0, signal / I_tot, np.inf)
    successes = transmit & (sir > theta)
    return TrialOutcome(
        successes=successes,
        transmitted=transmit,
        weights=net.cell_areas,
    )


def simulate_rateless_async(config: SimConfig, rng: np.random.Generator) -> TrialOutcome:
    """One tagged link under space-time interferer arrivals.

    The tagged user sits at the window centre with its serving station at
    the nearest-transmitter distance (Rayleigh with scale 1/sqrt(2 pi lam)).
    Interferers arrive as a Poisson process of intensity lambda_s on the
    window x [-N, N) horizon (arrivals outside cannot overlap since
    packet times are at most N), each transmitting for an i.i.d. duration
    drawn from the interferer packet-time law, and only stations beyond
    the serving distance interfere (nearest-transmitter exclusion).
    """
    p = config.params
    K, N, side = config.K, config.N, config.side
    model = thinning_model(p)
    D = math.sqrt(-math.log(1.0 - rng.random()) / (math.pi * config.lam))
    h = rng.exponential()
    sig = h * D ** (-config.alpha)
    m = int(rng.poisson(config.rain_intensity * side * side * 2 * N))
    centre = np.array([[side / 2.0, side / 2.0]])
    pos = rng.uniform(0.0, side, (m, 2))
    r2 = torus_gaps(pos, centre, side)[:, 0]
    g = rng.exponential(1.0, m)
    starts = rng.uniform(-float(N), float(N), m)
    durations = model.sample_packet_times(rng, m)
    keep = r2 >= D * D
    r2, g, starts, durations = r2[keep], g[keep], starts[keep], durations[keep]
    w = g * r2 ** (-config.alpha / 2.0)

    ts = np.arange(1, N + 1, dtype=float)
    overlap = np.clip(
        np.minimum(ts[:, None], starts + durations) - np.maximum(0.0, starts)[None, :],
        0.0, None)
    Ihat = overlap @ w / ts
    with np.errstate(divide="ignore", over="ignore"):
        C = np.minimum(np.log2(1.0 + sig / Ihat), _RATE_CAP)
    ok = (ts * C >= K) | (Ihat == 0.0)
    T = int(np.argmax(ok)) + 1 if ok.any() else N + 1
    return TrialOutcome(
        successes=np.array([T <= N]),
        packet_times=np.array([min(T, N)], dtype=np.int64),
    )


def aggregate(outcomes: Sequence[TrialOutcome], p: AnalyticalParams):
    """Pool outcomes into (empirical CcdfCurve, MetricsResult).

    Pooling is weighted by each user's cell area when available (see the
    module docstring); the confidence half-width uses the Kish effective
    sample size.  Rateless rates divide by the empirical E[T]; fixed-rate
    rates are (K/N) ps.
    """
    if not outcomes:
        raise ValueError("no outcomes to aggregate")
    succ = np.concatenate([o.successes for o in outcomes])
    w = np.concatenate([
        o.weights if o.weights is not None else np.ones(len(o.successes))
        for o in outcomes
    ])
    wsum = w.sum()
    if not wsum > 0:
        raise ValueError("degenerate pooling weights")
    ps = float((succ * w).sum() / wsum)
    neff = wsum * wsum / float((w * w).sum())
    ci = 1.96 * math.sqrt(max(ps * (1.0 - ps), 0.0) / neff)

    grid = np.arange(1.0, p.N + 1.0)
    rateless = outcomes[0].packet_times is not None
    if rateless:
        T = np.concatenate([o.packet_times for o in outcomes]).astype(float)
        order = np.argsort(T, kind="stable")
        Ts, ws = T[order], w[order]
        cumw = np.cumsum(ws)
        idx = np.searchsorted(Ts, grid, side="right")
        values = 1.0 - np.where(idx > 0, cumw[idx - 1], 0.0) / wsum
        values[grid >= p.N] = 0.0
        curve = CcdfCurve(grid, values, "empirical")
        rate = rate_from_ccdf(curve, p, ps).rate
    else:
        values = np.where(grid < p.N, 1.0, 0.0)
        curve = CcdfCurve(grid, values, "empirical")
        rate = p.K / p.N * ps
    return curve, MetricsResult(ps=ps, rate=rate, ci_halfwidth=ci)


def trial_rng(seed: int, trial: int, attempt: int = 0) -> np.random.Generator:
    """Counter-based stream for one trial: Philox keyed by (seed, trial)
    so results are bit-identical whatever the execution order."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64((attempt << 48) | trial)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_one(config: SimConfig, trial: int) -> TrialOutcome:
    for attempt in range(4):
        rng = trial_rng(config.seed, trial, attempt)
        try:
            if config.mode == "async-rain":
                return simulate_rateless_async(config, rng)
            net = sample_network(config, rng)
            if config.mode == "sync-tvi":
                return simulate_rateless_tvi(net, config)
            if config.mode == "sync-ci":
                return simulate_rateless_ci(net, config)
            return simulate_fixedrate(net, config)
        except DegenerateCellError:
            continue
    raise DegenerateCellError(f"trial {trial}: repeated degenerate realizations")


def thread_budget() -> int:
    try:
        return max(1, int(os.environ.get("CELLGEOM_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(config: SimConfig, threads: Optional[int] = None) -> list:
    """Run config.trials independent trials.  Each trial owns its RNG
    substream; with threads > 1 trials execute in worker processes and
    are reassembled in trial order, so output is identical for any
    thread count."""
    threads = thread_budget() if threads is None else max(1, threads)
    indices = range(config.trials)
    if threads == 1 or config.trials == 1:
        return [_run_one(config, i) for i in indices]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=min(threads, config.trials)) as pool:
        futures = [pool.submit(_run_one, config, i) for i in indices]
        return [f.result() for f in futures]
