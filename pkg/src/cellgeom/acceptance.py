"""Acceptance suite: the eleven go/no-go checks of this artifact, each
pinned to its tolerance.  `run_all` prints one PASS/FAIL line per
criterion; `cellgeom verify` exits nonzero when any fails.

Two checks are kept faithful to their stated form although the source
expressions cannot satisfy them; they are expected to fail and their
analysis lives in the repository notes:

* Criterion 8 asserts a sync <= async ordering of the two analytic
  bound curves.  The implemented formulas force the opposite pointwise
  order: the activity factor omega(t) is non-increasing and reaches
  omega_N exactly at t = N, so the synchronous bound dominates the
  asynchronous one for every t < N.
* Criterion 10 compares the beta = 0 Monte Carlo against both fading
  formulas at +-0.02.  The gating formula is exact there and passes
  (|gap| < 0.005); the inversion formula evaluates the smoothed
  surrogate E[exp(-X)] of the success event P(X < 1) and sits 0.06-0.11
  below the simulated truth, so that half fails at any sample size.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import fixedrate, rateless, specialfun
from .params import AnalyticalParams, PowerPolicy
from .simulator import SimConfig, aggregate, run_trials

__all__ = ["CriterionResult", "CRITERIA", "run_all"]


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  C{self.index:02d} {self.name}: {self.detail}"


def criterion_1() -> CriterionResult:
    """Hypergeometric identity cov = 1 + H to 1e-10."""
    worst = 0.0
    for theta in (0.01, 0.1, 1.0, 10.0, 100.0):
        for delta in (0.4, 0.5, 2.0 / 3.0):
            gap = abs(specialfun.hyp2f1_coverage(theta, delta) - 1.0
                      - specialfun.h_interference(theta, delta))
            worst = max(worst, gap)
    return CriterionResult(1, "hypergeometric identity", worst < 1e-10,
                           f"max |cov-1-H| = {worst:.3e} (tol 1e-10)")


def criterion_2() -> CriterionResult:
    """delta=1/2 closed forms to 1e-8 on a 50-point theta grid."""
    worst = 0.0
    for theta in np.linspace(0.0, 100.0, 50):
        theta = float(theta)
        rt = math.sqrt(theta)
        h_ref = rt * math.atan(rt)
        mu_ref = math.atan(rt) / rt if theta > 0 else 1.0
        worst = max(
            worst,
            abs(specialfun.hyp2f1_coverage(theta, 0.5) - (1.0 + h_ref)),
            abs(specialfun.h_interference(theta, 0.5) - h_ref),
            abs(specialfun.hyp2f1_mu_kernel(theta, 0.5) - mu_ref),
        )
    return CriterionResult(2, "delta=1/2 closed forms", worst < 1e-8,
                           f"max error = {worst:.3e} (tol 1e-8)")


def criterion_3() -> CriterionResult:
    """Gating-threshold <-> transmission-probability table."""
    p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
    worst_pl = 0.0
    for beta, target in ((0.0, 1.0), (1.55, 0.90), (2.5, 0.82), (3.5, 0.74)):
        got = fixedrate.transmission_probability(
            PowerPolicy.pathloss_threshold(beta), p)
        worst_pl = max(worst_pl, abs(got - target))
    worst_fad = 0.0
    for beta in (0.0, 0.1, 0.2, 0.3):
        got = fixedrate.transmission_probability(
            PowerPolicy.fading_threshold(beta), p)
        worst_fad = max(worst_fad, abs(got - math.exp(-beta)))
    ok = worst_pl < 0.005 and worst_fad < 1e-12
    return CriterionResult(
        3, "transmission-probability table", ok,
        f"pathloss max dev = {worst_pl:.4f} (tol 0.005), "
        f"fading max dev = {worst_fad:.2e} (exact)")


def criterion_4() -> CriterionResult:
    """Fractional power control at tau -> 0 meets the gating formula."""
    p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=100)
    worst = 0.0
    for beta in (1.55, 2.5):
        for theta in (0.5, 1.0, 2.0):
            a = fixedrate.ps_fpc(theta, PowerPolicy.pathloss_fpc(1e-3, beta=beta), p)
            b = fixedrate.ps_pathloss_threshold(
                theta, PowerPolicy.pathloss_threshold(beta), p)
            worst = max(worst, abs(a - b))
    return CriterionResult(4, "fpc tau->0 consistency", worst < 1e-3,
                           f"max |ps_fpc(tau=1e-3) - ps_thr| = {worst:.2e} (tol 1e-3)")


def criterion_5() -> CriterionResult:
    """beta=0 coincidence of both gated fixed-rate formulas with the
    rateless constant-interference success probability."""
    worst = 0.0
    for alpha in (3.0, 4.0):
        for N in (100, 200, 300):
            p = AnalyticalParams(lam=1.0, alpha=alpha, K=75.0, N=N)
            ref = rateless.ps_rateless_ci(p)
            a = fixedrate.ps_pathloss_threshold(
                p.theta, PowerPolicy.pathloss_threshold(1e-9), p)
            b = fixedrate.ps_fading_threshold(
                p.theta, PowerPolicy.fading_threshold(0.0), p)
            worst = max(worst, abs(a - ref), abs(b - ref))
    return CriterionResult(5, "beta=0 coincidence", worst < 1e-6,
                           f"max deviation = {worst:.2e} (tol 1e-6)")


def _pooled(outcomes):
    T = np.concatenate([o.packet_times for o in outcomes]).astype(float)
    w = np.concatenate([o.weights for o in outcomes])
    s = np.concatenate([o.successes for o in outcomes])
    return T, w, s


def criterion_6() -> CriterionResult:
    """Constant-interference Monte Carlo vs the closed form."""
    cfg = SimConfig(side=60.0, lam=1.0, K=75.0, N=300, alpha=3.0,
                    mode="sync-ci", trials=4, seed=601)
    outcomes = run_trials(cfg)
    T, w, succ = _pooled(outcomes)
    users = len(T)
    wsum = w.sum()
    worst_ps = 0.0
    for N in (100, 200, 300):
        p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=N)
        # decode by N: a clipped time equal to the horizon is a success
        # only when it actually decoded there
        ok = (T < N) | ((T == N) & succ)
        emp = float((ok * w).sum() / wsum)
        worst_ps = max(worst_ps, abs(emp - rateless.ps_rateless_ci(p)))
    p300 = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=300)
    grid = np.arange(1, 300)
    emp = np.array([((T > t) * w).sum() / wsum for t in grid])
    ana = np.array([rateless.ccdf_const_interference(float(t), p300) for t in grid])
    sup = float(np.abs(emp - ana).max())
    ok = users >= 10_000 and worst_ps <= 0.015 and sup < 0.02
    return CriterionResult(
        6, "Monte Carlo vs constant-interference closed form", ok,
        f"{users} users; max |ps gap| = {worst_ps:.4f} (tol 0.015), "
        f"CCDF sup gap = {sup:.4f} (tol 0.02)")


def criterion_7() -> CriterionResult:
    """Simulated coupled dynamics never exceed the thinning bound + 3 sigma.

    The binomial standard error uses the effective (area-weighted) sample
    size with the proportion clamped one observation away from {0, 1}:
    the plug-in estimate degenerates to zero there while the true
    uncertainty of an all-ones cell is ~1/n (rule of three)."""
    cfg = SimConfig(side=60.0, lam=1.0, K=75.0, N=300, alpha=3.0,
                    mode="sync-tvi", trials=6, seed=701)
    outcomes = run_trials(cfg)
    T, w, _ = _pooled(outcomes)
    wsum = w.sum()
    neff = wsum * wsum / float((w * w).sum())
    p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=300)
    grid = np.arange(1, 300)
    emp = np.array([((T > t) * w).sum() / wsum for t in grid])
    bound = np.array([rateless.ccdf_thinning_bound_sync(float(t), p) for t in grid])
    p_eff = np.clip(emp, 1.0 / neff, 1.0 - 1.0 / neff)
    sigma3 = 3.0 * np.sqrt(p_eff * (1.0 - p_eff) / neff)
    viol = float((emp - bound - sigma3).max())
    ok = len(T) >= 10_000 and viol <= 1e-12
    return CriterionResult(
        7, "thinning-bound dominance over simulation", ok,
        f"{len(T)} users; max (emp - bound - 3sigma) = {viol:.2e} "
        f"(raw max emp-bound = {float((emp - bound).max()):.4f})")


def criterion_8() -> CriterionResult:
    """Stated ordering: sync bound <= async bound <= constant-interference,
    pointwise with 1e-12 slack.  Expected to fail in its first part; the
    implemented formulas force the opposite order for t < N."""
    worst_sa = -math.inf
    worst_ac = -math.inf
    for alpha in (3.0, 4.0):
        p = AnalyticalParams(lam=1.0, alpha=alpha, K=75.0, N=300)
        for t in range(1, 301):
            ps_b = rateless.ccdf_thinning_bound_sync(float(t), p)
            pa_b = rateless.ccdf_thinning_bound_async(float(t), p)
            pc_b = rateless.ccdf_const_interference(float(t), p)
            worst_sa = max(worst_sa, ps_b - pa_b)
            worst_ac = max(worst_ac, pa_b - pc_b)
    ok = worst_sa <= 1e-12 and worst_ac <= 1e-12
    return CriterionResult(
        8, "sync <= async <= constant-interference ordering", ok,
        f"max (sync - async) = {worst_sa:.4f}, max (async - ci) = {worst_ac:.2e} "
        "(tol 1e-12 each; the first inequality cannot hold: omega(t) "
        "decreases to omega_N at t=N, see notes)")


def criterion_9() -> CriterionResult:
    """Published rate span of the two rateless analytic curves at alpha=4:
    [R_ci, R_thinning] matches [0.78, 1.0] at N=100 and [0.6, 0.9] at
    N=300, each endpoint to its quoted precision (the curves bracket the
    span; interval membership of rounded endpoints is reported too)."""
    vals = {}
    for N in (100, 300):
        p = AnalyticalParams(lam=1.0, alpha=4.0, K=75.0, N=N)
        vals[("ci", N)] = rateless.ps_rate_rateless_ci(p).rate
        vals[("thin", N)] = rateless.ps_rate_thinning_sync(p).rate
    checks = [
        abs(vals[("ci", 100)] - 0.78) <= 0.005,
        abs(vals[("thin", 100)] - 1.0) <= 0.05,
        abs(vals[("ci", 300)] - 0.6) <= 0.05,
        abs(vals[("thin", 300)] - 0.9) <= 0.05,
        vals[("ci", 100)] <= vals[("thin", 100)],
        vals[("ci", 300)] <= vals[("thin", 300)],
    ]
    return CriterionResult(
        9, "rateless rate spans", all(checks),
        f"R_100 = [{vals[('ci', 100)]:.4f}, {vals[('thin', 100)]:.4f}] vs [0.78, 1.0]; "
        f"R_300 = [{vals[('ci', 300)]:.4f}, {vals[('thin', 300)]:.4f}] vs [0.6, 0.9]")


def criterion_10() -> CriterionResult:
    """Fixed-rate Monte Carlo at beta=0 vs the fading-policy formulas.

    Expected to fail on the inversion half: its formula carries an
    indicator->exponential smoothing that the gating formula does not
    (see the module docstring)."""
    worst = 0.0
    detail = []
    for kind, policy in (("threshold", PowerPolicy.fading_threshold(0.0)),
                         ("tci", PowerPolicy.fading_tci(beta=0.0))):
        for N in (100, 200):
            p = AnalyticalParams(lam=1.0, alpha=4.0, K=75.0, N=N)
            cfg = SimConfig(side=60.0, lam=1.0, K=75.0, N=N, alpha=4.0,
                            mode="fixed-rate", policy=policy, trials=3,
                            seed=1000 + N + (0 if kind == "threshold" else 7))
            _, m = aggregate(run_trials(cfg), p)
            ana = fixedrate.ps_fixed_rate(policy, p)
            gap = abs(m.ps - ana)
            worst = max(worst, gap)
            detail.append(f"{kind} N={N}: |{m.ps:.4f}-{ana:.4f}|={gap:.4f}")
    return CriterionResult(10, "fixed-rate Monte Carlo at beta=0",
                           worst <= 0.02, "; ".join(detail) + " (tol 0.02)")


def criterion_11() -> CriterionResult:
    """CLI byte-determinism across repeat runs and thread counts."""
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, threads in enumerate(("1", "2")):
            out = os.path.join(tmp, f"run{i}")
            os.makedirs(out)
            env = dict(os.environ, CELLGEOM_THREADS=threads)
            proc = subprocess.run(
                [sys.executable, "-m", "cellgeom", "run",
                 "--preset", "rate-vs-N-pl-threshold", "--seed", "42",
                 "--out", out],
                capture_output=True, text=True, env=env, timeout=1200)
            if proc.returncode != 0:
                return CriterionResult(
                    11, "CLI determinism", False,
                    f"run {i} failed: {proc.stderr.strip()[-200:]}")
            with open(os.path.join(out, "rate-vs-N-pl-threshold.csv"), "rb") as fh:
                blobs.append(fh.read())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    return CriterionResult(
        11, "CLI determinism", ok,
        f"CSV bytes {'identical' if ok else 'DIFFER'} across thread counts "
        f"({len(blobs[0])} bytes)")


CRITERIA = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
    criterion_11,
)


def run_all(skip=()) -> list:
    """Run every criterion, print one line each, return the results."""
    results = []
    for fn in CRITERIA:
        idx = int(fn.__name__.rsplit("_", 1)[1])
        if idx in skip:
            continue
        try:
            res = fn()
        except Exception as exc:  # noqa: BLE001 - report, keep going
            res = CriterionResult(idx, fn.__doc__.splitlines()[0], False,
                                  f"raised {type(exc).__name__}: {exc}")
        print(res.line(), flush=True)
        results.append(res)
    return results
