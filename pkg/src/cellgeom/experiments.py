"""Sweep driver: expand a figure preset into (engine, scheme, N, beta)
cells, evaluate analytic formulas and/or Monte Carlo runs, and emit
sorted CSV (plus an optional gnuplot companion script)."""

from __future__ import annotations

import configparser
import math
import warnings
import zlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import fixedrate, rateless
from .params import AnalyticalParams, PowerPolicy
from .simulator import SimConfig, TrialOutcome, aggregate, run_trials

__all__ = [
    "ExperimentSpec",
    "ResultRow",
    "PRESETS",
    "build_spec",
    "run_experiment",
    "emit_csv",
    "emit_plot_script",
    "agreement_report",
    "load_config",
]

PATHLOSS_BETAS = (0.0, 1.55, 2.5, 3.5)
FADING_BETAS = (0.0, 0.1, 0.2, 0.3)
DEFAULT_N_GRID = (75, 100, 150, 200, 250, 300)

# preset -> (alpha, fixed-rate scheme or None, beta list, tau)
PRESETS = {
    "ps-vs-N-pl-threshold": (3.0, "pl-threshold", PATHLOSS_BETAS, 0.0),
    "rate-vs-N-pl-threshold": (3.0, "pl-threshold", PATHLOSS_BETAS, 0.0),
    "ps-vs-N-pl-tci": (4.0, "pl-tci", PATHLOSS_BETAS, 1.0),
    "rate-vs-N-pl-tci": (4.0, "pl-tci", PATHLOSS_BETAS, 1.0),
    "rate-vs-N-pl-fpc": (3.0, "pl-fpc", PATHLOSS_BETAS, 0.5),
    "rate-vs-N-fading-threshold": (3.0, "fading-threshold", FADING_BETAS, 0.0),
    "rate-vs-N-fading-tci": (4.0, "fading-tci", FADING_BETAS, 0.0),
    "async-vs-sync": (3.0, None, (0.0,), 0.0),
}

_SCHEME_TO_POLICY = {
    "pl-threshold": lambda beta, tau: PowerPolicy.pathloss_threshold(beta),
    "pl-tci": lambda beta, tau: PowerPolicy.pathloss_fpc(tau=1.0, beta=beta),
    "pl-fpc": lambda beta, tau: PowerPolicy.pathloss_fpc(tau=tau, beta=beta),
    "fading-threshold": lambda beta, tau: PowerPolicy.fading_threshold(beta),
    "fading-tci": lambda beta, tau: PowerPolicy.fading_tci(beta=beta),
}


@dataclass(frozen=True)
class ExperimentSpec:
    figure_preset: str
    N_grid: tuple = DEFAULT_N_GRID
    beta_list: tuple = PATHLOSS_BETAS
    tau: float = 0.0
    base: SimConfig = field(default_factory=SimConfig)
    engines: tuple = ("analytic", "simulation")

    def __post_init__(self):
        if not self.N_grid or list(self.N_grid) != sorted(self.N_grid):
            raise ValueError("N_grid must be non-empty ascending")
        if not self.beta_list:
            raise ValueError("beta_list must be non-empty")
        bad = set(self.engines) - {"analytic", "simulation"}
        if bad:
            raise ValueError(f"unknown engines {sorted(bad)}")


@dataclass(frozen=True)
class ResultRow:
    engine: str
    scheme: str
    N: int
    beta: float
    tau: float
    ps: float
    rate: float
    ci: Optional[float] = None


def build_spec(preset: str, **overrides) -> ExperimentSpec:
    """Expand a named preset into an ExperimentSpec; keyword overrides
    win over preset defaults (side, lam, K, alpha, seed, trials, N_grid,
    beta_list, tau, engines)."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    alpha, scheme, betas, tau = PRESETS[preset]
    base = SimConfig(
        side=overrides.pop("side", 60.0),
        lam=overrides.pop("lam", 1.0),
        K=overrides.pop("K", 75.0),
        N=max(overrides.get("N_grid", DEFAULT_N_GRID)),
        alpha=overrides.pop("alpha", alpha),
        trials=overrides.pop("trials", 2),
        seed=overrides.pop("seed", 0),
    )
    spec = ExperimentSpec(
        figure_preset=preset,
        N_grid=tuple(overrides.pop("N_grid", DEFAULT_N_GRID)),
        beta_list=tuple(overrides.pop("beta_list", betas)),
        tau=overrides.pop("tau", tau),
        base=base,
        engines=tuple(overrides.pop("engines", ("analytic", "simulation"))),
    )
    if overrides:
        raise TypeError(f"unknown overrides {sorted(overrides)}")
    return spec


def _cell_seed(base_seed: int, label: str) -> int:
    return (base_seed * 1000003 + zlib.crc32(label.encode())) & 0x7FFFFFFFFFFFFFFF


def _nan_row(engine, scheme, N, beta, tau) -> ResultRow:
    return ResultRow(engine, scheme, int(N), float(beta), float(tau),
                     math.nan, math.nan, None)


def _analytic_rows(spec: ExperimentSpec):
    _, scheme, _, _ = PRESETS[spec.figure_preset]
    base = spec.base
    for N in spec.N_grid:
        p = AnalyticalParams(lam=base.lam, alpha=base.alpha, K=base.K, N=int(N))
        for name, fn in (("rateless-ci", rateless.ps_rate_rateless_ci),
                         ("rateless-thinning", rateless.ps_rate_thinning_sync)):
            try:
                m = fn(p)
                yield ResultRow("analytic", name, int(N), 0.0, 0.0, m.ps, m.rate)
            except Exception as exc:  # noqa: BLE001 - row-level fault barrier
                warnings.warn(f"analytic {name} N={N} failed: {exc}", stacklevel=2)
                yield _nan_row("analytic", name, N, 0.0, 0.0)
        if spec.figure_preset == "async-vs-sync":
            try:
                m = rateless.ps_rate_thinning_async(p)
                yield ResultRow("analytic", "rateless-async", int(N), 0.0, 0.0,
                                m.ps, m.rate)
            except Exception as exc:  # noqa: BLE001
                warnings.warn(f"analytic rateless-async N={N} failed: {exc}",
                              stacklevel=2)
                yield _nan_row("analytic", "rateless-async", N, 0.0, 0.0)
        if scheme is None:
            continue
        for beta in spec.beta_list:
            policy = _SCHEME_TO_POLICY[scheme](beta, spec.tau)
            try:
                ps = fixedrate.ps_fixed_rate(policy, p)
                m = fixedrate.fixed_rate_metrics(ps, p)
                yield ResultRow("analytic", scheme, int(N), float(beta),
                                policy.tau, m.ps, m.rate)
            except Exception as exc:  # noqa: BLE001
                warnings.warn(f"analytic {scheme} N={N} beta={beta} failed: {exc}",
                              stacklevel=2)
                yield _nan_row("analytic", scheme, N, beta, policy.tau)


def _derive_at_N(outcomes: Sequence[TrialOutcome], N: int):
    """Re-censor rateless outcomes recorded at a horizon >= N.  A packet
    time equal to the recorded horizon is a success only if it decoded
    there (the censored ones carry the same clipped value)."""
    outs = []
    for o in outcomes:
        T = o.packet_times
        outs.append(TrialOutcome(
            successes=(T < N) | ((T == N) & o.successes),
            packet_times=np.minimum(T, N),
            weights=o.weights,
        ))
    return outs


def _simulation_rows(spec: ExperimentSpec):
    _, scheme, _, _ = PRESETS[spec.figure_preset]
    base = spec.base
    n_max = int(max(spec.N_grid))

    # rateless: the coupled dynamics below the horizon do not depend on N,
    # so one run at max(N_grid) serves the whole grid
    label = "rateless-tvi"
    cfg = replace(base, mode="sync-tvi", N=n_max,
                  seed=_cell_seed(base.seed, label))
    try:
        outcomes = run_trials(cfg)
        for N in spec.N_grid:
            p = AnalyticalParams(lam=base.lam, alpha=base.alpha, K=base.K, N=int(N))
            _, m = aggregate(_derive_at_N(outcomes, int(N)), p)
            yield ResultRow("simulation", label, int(N), 0.0, 0.0,
                            m.ps, m.rate, m.ci_halfwidth)
    except Exception as exc:  # noqa: BLE001
        warnings.warn(f"simulation {label} failed: {exc}", stacklevel=2)
        for N in spec.N_grid:
            yield _nan_row("simulation", label, N, 0.0, 0.0)

    if spec.figure_preset == "async-vs-sync":
        for N in spec.N_grid:
            label = f"rateless-async-N{N}"
            cfg = replace(base, mode="async-rain", N=int(N),
                          trials=base.trials * 200,
                          seed=_cell_seed(base.seed, label))
            p = AnalyticalParams(lam=base.lam, alpha=base.alpha, K=base.K, N=int(N))
            try:
                _, m = aggregate(run_trials(cfg), p)
                yield ResultRow("simulation", "rateless-async", int(N), 0.0, 0.0,
                                m.ps, m.rate, m.ci_halfwidth)
            except Exception as exc:  # noqa: BLE001
                warnings.warn(f"simulation rateless-async N={N} failed: {exc}",
                              stacklevel=2)
                yield _nan_row("simulation", "rateless-async", N, 0.0, 0.0)

    if scheme is None:
        return
    for beta in spec.beta_list:
        policy = _SCHEME_TO_POLICY[scheme](beta, spec.tau)
        for N in spec.N_grid:
            label = f"{scheme}-b{beta}-N{N}"
            cfg = replace(base, mode="fixed-rate", N=int(N), policy=policy,
                          seed=_cell_seed(base.seed, label))
            p = AnalyticalParams(lam=base.lam, alpha=base.alpha, K=base.K, N=int(N))
            try:
                _, m = aggregate(run_trials(cfg), p)
                yield ResultRow("simulation", scheme, int(N), float(beta),
                                policy.tau, m.ps, m.rate, m.ci_halfwidth)
            except Exception as exc:  # noqa: BLE001
                warnings.warn(f"simulation {scheme} beta={beta} N={N} failed: {exc}",
                              stacklevel=2)
                yield _nan_row("simulation", scheme, N, beta, policy.tau)


def run_experiment(spec: ExperimentSpec) -> list:
    """One ResultRow per (engine, scheme, N, beta); failures are reported
    as warnings and materialize as NaN rows, the run continues."""
    rows = []
    if "analytic" in spec.engines:
        rows.extend(_analytic_rows(spec))
    if "simulation" in spec.engines:
        rows.extend(_simulation_rows(spec))
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def emit_csv(rows: Sequence[ResultRow], path) -> None:
    """Write `engine,scheme,N,beta,tau,ps,rate,ci`, 6 significant digits,
    sorted by (scheme, beta, N)."""
    ordered = sorted(rows, key=lambda r: (r.scheme, r.beta, r.N, r.engine, r.tau))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("engine,scheme,N,beta,tau,ps,rate,ci\n")
            for r in ordered:
                fh.write(",".join([
                    r.engine, r.scheme, _fmt(r.N), _fmt(r.beta), _fmt(r.tau),
                    _fmt(r.ps), _fmt(r.rate), _fmt(r.ci),
                ]) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def emit_plot_script(rows: Sequence[ResultRow], csv_path, path) -> None:
    """Companion gnuplot script: ps and rate versus N per scheme."""
    schemes = sorted({r.scheme for r in rows})
    lines = [
        "# gnuplot companion; run: gnuplot <this file>",
        "set datafile separator ','",
        "set key outside",
        "set xlabel 'N (channel uses)'",
    ]
    for col, name in ((6, "ps"), (7, "rate")):
        lines.append(f"set ylabel '{name}'")
        plots = []
        for s in schemes:
            for eng, style in (("analytic", "with lines"),
                               ("simulation", "with points")):
                plots.append(
                    f"'{csv_path}' using 3:(strcol(1) eq '{eng}' && "
                    f"strcol(2) eq '{s}' ? column({col}) : NaN) {style} "
                    f"title '{s} ({eng})'")
        lines.append("plot " + ", \\\n     ".join(plots))
        lines.append("pause -1")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def agreement_report(rows: Sequence[ResultRow]) -> dict:
    """max |ps_analytic - ps_simulation| per scheme over matching cells."""
    analytic = {(r.scheme, r.N, r.beta): r.ps for r in rows if r.engine == "analytic"}
    out: dict = {}
    for r in rows:
        if r.engine != "simulation":
            continue
        key = (r.scheme, r.N, r.beta)
        if key in analytic and not (math.isnan(r.ps) or math.isnan(analytic[key])):
            d = abs(r.ps - analytic[key])
            out[r.scheme] = max(out.get(r.scheme, 0.0), d)
    return out


_CONFIG_KEYS = {
    "side": float, "lambda": float, "alpha": float, "k": float,
    "trials": int, "seed": int, "tau": float,
    "n_grid": lambda s: tuple(int(v) for v in s.replace(" ", "").split(",")),
    "beta_list": lambda s: tuple(float(v) for v in s.replace(" ", "").split(",")),
    "engines": lambda s: tuple(s.replace(" ", "").split(",")),
    "preset": str, "out": str,
}


def load_config(path) -> dict:
    """`key = value` file with [section] headers; section names are
    organizational only, keys are globally unique."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[_top]\n" + fh.read())
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r} in {path}")
            out[key] = _CONFIG_KEYS[key](raw)
    return out
