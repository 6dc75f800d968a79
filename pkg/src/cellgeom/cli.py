"""Command-line front end.

    cellgeom run --preset <name> [--config <file>] [--seed <u64>]
                 [--trials <n>] [--out <dir>] [...overrides]
    cellgeom verify

CELLGEOM_THREADS caps trial-level parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import (
    PRESETS,
    agreement_report,
    build_spec,
    emit_csv,
    emit_plot_script,
    load_config,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellgeom",
        description="Cellular downlink adaptive-transmission sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a figure preset and emit CSV")
    run.add_argument("--preset", choices=sorted(PRESETS), help="figure preset")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--trials", type=int, help="Monte Carlo realizations per cell")
    run.add_argument("--out", help="output directory (default .)")
    run.add_argument("--side", type=float, help="window side length (m)")
    run.add_argument("--lambda", dest="lam", type=float, help="BS density (1/m^2)")
    run.add_argument("--alpha", type=float, help="path-loss exponent")
    run.add_argument("--k", type=float, help="bits per packet")
    run.add_argument("--n-grid", help="comma list of delay constraints N")
    run.add_argument("--beta-list", help="comma list of thresholds")
    run.add_argument("--tau", type=float, help="FPC exponent")
    run.add_argument("--engines", help="comma subset of analytic,simulation")
    run.add_argument("--plot-script", action="store_true",
                     help="also write a gnuplot companion script")

    sub.add_parser("verify", help="run the acceptance suite (nonzero exit on failure)")
    return parser


def _collect_overrides(args) -> dict:
    cfg = {}
    if args.config:
        cfg.update(load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.side is not None:
        cfg["side"] = args.side
    if args.lam is not None:
        cfg["lambda"] = args.lam
    if args.alpha is not None:
        cfg["alpha"] = args.alpha
    if args.k is not None:
        cfg["k"] = args.k
    if args.n_grid:
        cfg["n_grid"] = tuple(int(v) for v in args.n_grid.split(","))
    if args.beta_list:
        cfg["beta_list"] = tuple(float(v) for v in args.beta_list.split(","))
    if args.tau is not None:
        cfg["tau"] = args.tau
    if args.engines:
        cfg["engines"] = tuple(args.engines.split(","))
    return cfg


_KEYMAP = {"lambda": "lam", "k": "K", "n_grid": "N_grid"}


def _run(args) -> int:
    cfg = _collect_overrides(args)
    preset = args.preset or cfg.pop("preset", None)
    if not preset:
        print("error: --preset required (or set it in the config file)",
              file=sys.stderr)
        return 2
    out_dir = args.out or cfg.pop("out", None) or "."
    cfg.pop("out", None)
    overrides = {_KEYMAP.get(k, k): v for k, v in cfg.items()}
    spec = build_spec(preset, **overrides)
    rows = run_experiment(spec)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{preset}.csv")
    emit_csv(rows, csv_path)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if args.plot_script:
        gp_path = os.path.join(out_dir, f"{preset}.gp")
        emit_plot_script(rows, csv_path, gp_path)
        print(f"wrote {gp_path}")
    report = agreement_report(rows)
    for scheme in sorted(report):
        print(f"max |ps(analytic) - ps(simulation)| [{scheme}]: {report[scheme]:.4f}")
    return 0


def _verify() -> int:
    from .acceptance import run_all
    results = run_all()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    return _verify()


if __name__ == "__main__":
    sys.exit(main())
