import math

import numpy as np
import pytest
from scipy.spatial import cKDTree
from scipy.stats import kstest

import oracles
from cellgeom.params import AnalyticalParams, PowerPolicy
from cellgeom.rateless import ccdf_thinning_bound_async, ps_rateless_ci
from cellgeom.simulator import (
    DegenerateCellError,
    NetworkRealization,
    SimConfig,
    TrialOutcome,
    _sample_users,
    aggregate,
    run_trials,
    sample_network,
    simulate_fixedrate,
    simulate_rateless_async,
    simulate_rateless_ci,
    simulate_rateless_tvi,
    trial_rng,
)


def two_bs_network(side=100.0, h0=1.0, h1=1.0, g10=1.0, g01=1.0):
    """BS0 at (10,10) serving (11,10) [D=1]; BS1 at (13,10) serving
    (13.5,10) [D=0.5].  g10 is the fade BS1 -> user0 (distance 2),
    g01 is BS0 -> user1 (distance 3.5)."""
    bs = np.array([[10.0, 10.0], [13.0, 10.0]])
    users = np.array([[11.0, 10.0], [13.5, 10.0]])
    cross = np.array([[0.0, g01], [g10, 0.0]])
    return NetworkRealization(
        bs_positions=bs,
        user_positions=users,
        desired_fades=np.array([h0, h1]),
        cross_fades=cross,
        start_times=np.zeros(2),
        cell_areas=np.ones(2),
        side=side,
    )


def single_bs_network(side=50.0, h=1.0):
    return NetworkRealization(
        bs_positions=np.array([[25.0, 25.0]]),
        user_positions=np.array([[26.0, 25.0]]),
        desired_fades=np.array([h]),
        cross_fades=np.zeros((1, 1)),
        start_times=np.zeros(1),
        cell_areas=np.array([side * side]),
        side=side,
    )


class TestSampleNetwork:
    def test_count_moments(self):
        cfg = SimConfig(side=12.0, lam=1.0, K=75.0, N=50, mode="sync-ci", seed=1)
        counts = [len(sample_network(cfg, trial_rng(1, i)).bs_positions)
                  for i in range(150)]
        mean = np.mean(counts)
        # Poisson(144): mean within 4 sigma/sqrt(150)
        assert abs(mean - 144.0) < 4.0 * 12.0 / math.sqrt(150)

    def test_every_user_served_by_nearest(self):
        cfg = SimConfig(side=20.0, lam=1.0, K=75.0, N=50, mode="sync-ci", seed=2)
        net = sample_network(cfg, trial_rng(2, 0))
        tree = cKDTree(net.bs_positions, boxsize=net.side)
        _, idx = tree.query(net.user_positions)
        assert np.array_equal(idx, np.arange(len(net.bs_positions)))

    def test_cell_areas_tile_the_window(self):
        cfg = SimConfig(side=15.0, lam=1.0, K=75.0, N=50, mode="sync-ci", seed=3)
        net = sample_network(cfg, trial_rng(3, 0))
        assert net.cell_areas.sum() == pytest.approx(15.0**2, rel=1e-9)
        assert np.all(net.cell_areas > 0)

    def test_single_cell_user_uniform_on_torus(self):
        # one BS owns the whole torus; its user's distance must follow
        # the torus-ball law
        side = 6.0
        bs = np.array([[3.0, 3.0]])
        rng = trial_rng(4, 0)
        dists = []
        for _ in range(2500):
            u = _sample_users(bs, side, rng)[0]
            gap = np.abs(u - bs[0])
            gap = np.minimum(gap, side - gap)
            dists.append(math.hypot(*gap))
        res = kstest(dists, lambda r: np.array(
            [oracles.torus_distance_cdf(v, side) for v in np.atleast_1d(r)]))
        assert res.pvalue > 0.01

    def test_degenerate_cell_raises(self):
        # two coincident stations: one cell has zero area
        bs = np.array([[5.0, 5.0], [5.0, 5.0]])
        with pytest.raises(DegenerateCellError):
            _sample_users(bs, 10.0, trial_rng(5, 0))


class TestRatelessCi:
    def test_unit_sir_decodes_at_K(self):
        # SIR = 1: C = 1 bit/use, 75 bits -> 75 uses
        cfg = SimConfig(side=100.0, lam=1.0, K=75.0, N=100, alpha=3.0, mode="sync-ci")
        net = two_bs_network(g10=2.0**3)  # interference = signal = 1
        out = simulate_rateless_ci(net, cfg)
        assert out.packet_times[0] == 75
        assert out.successes[0]

    def test_sir_three_decodes_at_38(self):
        cfg = SimConfig(side=100.0, lam=1.0, K=75.0, N=100, alpha=3.0, mode="sync-ci")
        net = two_bs_network(g10=2.0**3 / 3.0)  # SIR = 3, C = 2
        out = simulate_rateless_ci(net, cfg)
        assert out.packet_times[0] == 38

    def test_single_bs_decodes_immediately(self):
        cfg = SimConfig(side=50.0, lam=1.0, K=75.0, N=100, alpha=3.0, mode="sync-ci")
        out = simulate_rateless_ci(single_bs_network(), cfg)
        assert out.packet_times[0] == 1

    def test_matches_analytic_ccdf_loosely(self):
        cfg = SimConfig(side=40.0, lam=1.0, K=75.0, N=300, alpha=3.0,
                        mode="sync-ci", trials=1, seed=6)
        p = cfg.params
        curve, m = aggregate(run_trials(cfg), p)
        assert m.ps == pytest.approx(ps_rateless_ci(p), abs=0.05)


def hand_tvi(sig, M, K, N):
    """Scalar reference of the documented sweep semantics."""
    n = len(sig)
    T = [None] * n
    S = [0.0] * n
    active = [True] * n
    for t in range(1, N + 1):
        I = [sum(M[k][i] for k in range(n) if active[k] and k != i)
             for i in range(n)]
        for i in range(n):
            S[i] += I[i]
        decoded = []
        for i in range(n):
            if T[i] is not None:
                continue
            ihat = S[i] / t
            if ihat == 0.0 or t * min(math.log2(1.0 + sig[i] / ihat), 30.0) >= K:
                decoded.append(i)
        for i in decoded:
            T[i] = t
            active[i] = False
    return [N if v is None else v for v in T]


class TestRatelessTvi:
    def test_two_station_pencil_recursion(self):
        # asymmetric fades: user1 decodes first, user0 benefits afterwards
        cfg = SimConfig(side=100.0, lam=1.0, K=8.0, N=64, alpha=3.0, mode="sync-tvi")
        net = two_bs_network(h0=0.6, h1=4.0, g10=6.0, g01=0.5)
        M = [[0.0, 0.5 * 3.5**-3.0], [6.0 * 2.0**-3.0, 0.0]]
        sig = [0.6 * 1.0**-3.0, 4.0 * 0.5**-3.0]
        want = hand_tvi(sig, M, 8.0, 64)
        out = simulate_rateless_tvi(net, cfg)
        assert list(out.packet_times) == want
        # the dynamics actually switched regimes
        assert want[1] < want[0]

    def test_symmetric_simultaneous_decode(self):
        cfg = SimConfig(side=100.0, lam=1.0, K=8.0, N=64, alpha=3.0, mode="sync-tvi")
        bs = np.array([[10.0, 10.0], [14.0, 10.0]])
        users = np.array([[11.0, 10.0], [13.0, 10.0]])
        net = NetworkRealization(
            bs_positions=bs, user_positions=users,
            desired_fades=np.array([1.0, 1.0]),
            cross_fades=np.array([[0.0, 2.0], [2.0, 0.0]]),
            start_times=np.zeros(2), cell_areas=np.ones(2), side=100.0)
        out = simulate_rateless_tvi(net, cfg)
        assert out.packet_times[0] == out.packet_times[1]

    def test_single_bs_decodes_at_one(self):
        cfg = SimConfig(side=50.0, lam=1.0, K=75.0, N=100, alpha=3.0, mode="sync-tvi")
        out = simulate_rateless_tvi(single_bs_network(), cfg)
        assert out.packet_times[0] == 1

    def test_dominated_by_constant_interference(self):
        cfg = SimConfig(side=25.0, lam=1.0, K=75.0, N=300, alpha=3.0,
                        mode="sync-tvi", seed=7)
        net = sample_network(cfg, trial_rng(7, 0))
        t_tvi = simulate_rateless_tvi(net, cfg).packet_times
        t_ci = simulate_rateless_ci(net, cfg).packet_times
        assert np.all(t_tvi <= t_ci)

    def test_forcing_early_silence_never_hurts_others(self):
        cfg = SimConfig(side=12.0, lam=1.0, K=75.0, N=300, alpha=3.0,
                        mode="sync-tvi", seed=8)
        net = sample_network(cfg, trial_rng(8, 0))
        n = len(net.bs_positions)
        base = simulate_rateless_tvi(net, cfg).packet_times
        stop = np.full(n, np.inf)
        stop[0] = 1  # silence station 0 after the first step
        forced = simulate_rateless_tvi(net, cfg, forced_stop=stop).packet_times
        others = np.arange(n) != 0
        assert np.all(forced[others] <= base[others])


class TestFixedRate:
    def test_tiny_threshold_success_equals_transmission(self):
        cfg = SimConfig(side=15.0, lam=1.0, K=1e-9, N=100, alpha=3.0,
                        mode="fixed-rate",
                        policy=PowerPolicy.pathloss_threshold(1.55), seed=9)
        net = sample_network(cfg, trial_rng(9, 0))
        out = simulate_fixedrate(net, cfg)
        assert np.array_equal(out.successes, out.transmitted)

    def test_success_requires_transmission(self):
        cfg = SimConfig(side=15.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="fixed-rate",
                        policy=PowerPolicy.fading_threshold(0.3), seed=10)
        net = sample_network(cfg, trial_rng(10, 0))
        out = simulate_fixedrate(net, cfg)
        assert not np.any(out.successes & ~out.transmitted)
        assert out.successes.sum() <= out.transmitted.sum()

    def test_constant_power_matches_coverage(self):
        cfg = SimConfig(side=40.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="fixed-rate", policy=PowerPolicy.constant(),
                        trials=1, seed=11)
        p = cfg.params
        _, m = aggregate(run_trials(cfg), p)
        assert m.ps == pytest.approx(ps_rateless_ci(p), abs=0.05)

    def test_tci_silences_below_threshold(self):
        cfg = SimConfig(side=100.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="fixed-rate", policy=PowerPolicy.fading_tci(beta=0.2))
        # serving fade above threshold, interferer fade below: interferer
        # silent, user0 sees zero interference and succeeds
        net = two_bs_network(h0=0.25, h1=0.1)
        out = simulate_fixedrate(net, cfg)
        assert list(out.transmitted) == [True, False]
        assert list(out.successes) == [True, False]


class TestAsync:
    def test_no_arrivals_decodes_at_one(self):
        cfg = SimConfig(side=60.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="async-rain", lambda_s=1e-9, trials=3, seed=12)
        for out in run_trials(cfg):
            assert out.packet_times[0] == 1

    def test_empirical_ccdf_below_async_bound(self):
        cfg = SimConfig(side=60.0, lam=1.0, K=75.0, N=300, alpha=3.0,
                        mode="async-rain", trials=400, seed=13)
        p = cfg.params
        T = np.concatenate([o.packet_times for o in run_trials(cfg)])
        n = len(T)
        for t in range(10, 300, 10):
            emp = float((T > t).mean())
            bound = ccdf_thinning_bound_async(float(t), p)
            sigma = math.sqrt(max(emp * (1 - emp), 1e-12) / n)
            assert emp <= bound + 3.0 * sigma + 1e-12


class TestAggregate:
    def test_all_success_at_one(self):
        p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
        o = TrialOutcome(successes=np.ones(5, bool),
                         packet_times=np.ones(5, dtype=np.int64))
        curve, m = aggregate([o], p)
        assert m.ps == 1.0
        assert np.all(curve.values == 0.0)  # nothing outlasts t = 1
        assert m.rate == pytest.approx(p.K)  # one-channel-use floor

    def test_all_censored(self):
        p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
        o = TrialOutcome(successes=np.zeros(4, bool),
                         packet_times=np.full(4, 100, dtype=np.int64))
        curve, m = aggregate([o], p)
        assert m.ps == 0.0 and m.rate == 0.0
        assert curve.values[-1] == 0.0 and curve.values[0] == 1.0

    def test_pooled_binomial_arithmetic(self):
        p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
        a = TrialOutcome(successes=np.array([True, True, False]),
                         packet_times=np.array([10, 20, 100], dtype=np.int64))
        b = TrialOutcome(successes=np.array([True]),
                         packet_times=np.array([50], dtype=np.int64))
        _, m = aggregate([a, b], p)
        assert m.ps == pytest.approx(3.0 / 4.0)
        assert m.ci_halfwidth == pytest.approx(
            1.96 * math.sqrt(0.75 * 0.25 / 4.0), rel=1e-12)

    def test_area_weighted_pooling(self):
        p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
        o = TrialOutcome(successes=np.array([True, False]),
                         packet_times=np.array([10, 100], dtype=np.int64),
                         weights=np.array([3.0, 1.0]))
        _, m = aggregate([o], p)
        assert m.ps == pytest.approx(0.75)

    def test_fixed_rate_metrics(self):
        p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
        o = TrialOutcome(successes=np.array([True, False, True, True]),
                         transmitted=np.array([True, False, True, True]))
        _, m = aggregate([o], p)
        assert m.rate == pytest.approx(p.K / p.N * 0.75)

    def test_empty_pool_rejected(self):
        with pytest.raises(ValueError):
            aggregate([], AnalyticalParams())


class TestDeterminism:
    def test_bit_identical_across_runs(self):
        cfg = SimConfig(side=15.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="sync-tvi", trials=2, seed=77)
        a = run_trials(cfg)
        b = run_trials(cfg)
        for x, y in zip(a, b):
            assert np.array_equal(x.packet_times, y.packet_times)
            assert np.array_equal(x.weights, y.weights)

    def test_bit_identical_across_thread_counts(self):
        cfg = SimConfig(side=15.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="sync-ci", trials=3, seed=78)
        seq = run_trials(cfg, threads=1)
        par = run_trials(cfg, threads=2)
        for x, y in zip(seq, par):
            assert np.array_equal(x.packet_times, y.packet_times)

    def test_streams_differ_across_trials(self):
        cfg = SimConfig(side=15.0, lam=1.0, K=75.0, N=100, alpha=3.0,
                        mode="sync-ci", trials=2, seed=79)
        a, b = run_trials(cfg)
        assert len(a.packet_times) != len(b.packet_times) or \
            not np.array_equal(a.packet_times, b.packet_times)


def test_low_density_config_warns():
    with pytest.warns(UserWarning):
        SimConfig(side=2.0, lam=1.0, K=75.0, N=50, mode="sync-ci")
