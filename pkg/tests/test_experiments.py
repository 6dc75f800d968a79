import csv
import io
import math
import os

import numpy as np
import pytest

from cellgeom.cli import main
from cellgeom.experiments import (
    ExperimentSpec,
    ResultRow,
    agreement_report,
    build_spec,
    emit_csv,
    emit_plot_script,
    load_config,
    run_experiment,
)
from cellgeom.params import AnalyticalParams
from cellgeom.rateless import ps_rateless_ci


class TestSpec:
    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            build_spec("rate-vs-M")

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            build_spec("rate-vs-N-pl-threshold", N_grid=(200, 100))
        with pytest.raises(ValueError):
            build_spec("rate-vs-N-pl-threshold", beta_list=())
        with pytest.raises(ValueError):
            ExperimentSpec("x", engines=("analytic", "gpu"))

    def test_unknown_override_rejected(self):
        with pytest.raises(TypeError):
            build_spec("rate-vs-N-pl-threshold", window=30.0)

    def test_preset_defaults(self):
        spec = build_spec("rate-vs-N-pl-tci")
        assert spec.base.alpha == 4.0
        assert spec.tau == 1.0
        spec = build_spec("rate-vs-N-fading-threshold")
        assert spec.beta_list == (0.0, 0.1, 0.2, 0.3)


class TestRunExperiment:
    def test_beta_zero_rows_equal_coverage(self):
        spec = build_spec("ps-vs-N-pl-threshold", N_grid=(100, 200),
                          beta_list=(0.0,), engines=("analytic",))
        rows = run_experiment(spec)
        got = {(r.N,): r.ps for r in rows if r.scheme == "pl-threshold"}
        for N in (100, 200):
            p = AnalyticalParams(lam=1.0, alpha=3.0, K=75.0, N=N)
            assert got[(N,)] == pytest.approx(ps_rateless_ci(p), abs=1e-9)

    def test_rateless_rows_present_for_each_N(self):
        spec = build_spec("rate-vs-N-fading-tci", N_grid=(100,),
                          beta_list=(0.0,), engines=("analytic",))
        rows = run_experiment(spec)
        schemes = {r.scheme for r in rows}
        assert {"rateless-ci", "rateless-thinning", "fading-tci"} <= schemes

    def test_published_rate_window_at_n100(self):
        spec = build_spec("rate-vs-N-pl-tci", N_grid=(100,), beta_list=(1.55,),
                          engines=("analytic",))
        rows = run_experiment(spec)
        ci = [r for r in rows if r.scheme == "rateless-ci"][0]
        thin = [r for r in rows if r.scheme == "rateless-thinning"][0]
        assert 0.77 <= ci.rate <= thin.rate <= 1.0

    def test_simulation_rows_carry_ci(self):
        spec = build_spec("ps-vs-N-pl-threshold", N_grid=(60,), beta_list=(1.55,),
                          trials=1, seed=5, side=15.0,
                          engines=("analytic", "simulation"))
        rows = run_experiment(spec)
        sims = [r for r in rows if r.engine == "simulation"]
        assert sims and all(r.ci is not None and r.ci >= 0 for r in sims)
        assert any(r.ci > 0 for r in sims)


class TestCsv:
    def test_empty_rows_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_text() == "engine,scheme,N,beta,tau,ps,rate,ci\n"

    def test_single_row_round_trip(self, tmp_path):
        row = ResultRow("analytic", "rateless-ci", 100, 0.0, 0.0, 0.636975, 0.7796)
        path = tmp_path / "one.csv"
        emit_csv([row], path)
        text = path.read_text().splitlines()
        assert len(text) == 2
        rec = next(csv.DictReader(io.StringIO("\n".join(text))))
        assert rec["engine"] == "analytic"
        assert float(rec["ps"]) == pytest.approx(0.636975)
        assert rec["ci"] == ""

    def test_thousand_rows_sorted(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [
            ResultRow(
                "analytic", f"s{int(rng.integers(4))}", int(rng.integers(1, 500)),
                float(rng.choice([0.0, 1.55, 2.5])), 0.0,
                float(rng.random()), float(rng.random()),
            )
            for _ in range(1000)
        ]
        path = tmp_path / "big.csv"
        emit_csv(rows, path)
        with open(path) as fh:
            recs = list(csv.DictReader(fh))
        keys = [(r["scheme"], float(r["beta"]), int(r["N"])) for r in recs]
        assert keys == sorted(keys)
        assert len(recs) == 1000

    def test_six_significant_digits(self, tmp_path):
        row = ResultRow("analytic", "x", 100, 0.1, 0.0, 0.123456789, 1234567.89)
        path = tmp_path / "fmt.csv"
        emit_csv([row], path)
        line = path.read_text().splitlines()[1]
        assert "0.123457" in line and "1.23457e+06" in line

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            emit_csv([], tmp_path / "no" / "such" / "dir.csv")


class TestConfigAndCli:
    def test_load_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[network]\nside = 30\nlambda = 1.0\nalpha = 4\n"
            "[sweep]\nn_grid = 100, 200\nbeta-list = 0, 0.1\n"
            "[run]\ntrials = 3\nseed = 9\nengines = analytic\n")
        got = load_config(cfg)
        assert got["side"] == 30.0
        assert got["n_grid"] == (100, 200)
        assert got["beta_list"] == (0.0, 0.1)
        assert got["engines"] == ("analytic",)

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[x]\nwindow = 30\n")
        with pytest.raises(ValueError):
            load_config(cfg)

    def test_cli_run_analytic_deterministic(self, tmp_path):
        args = ["run", "--preset", "rate-vs-N-fading-threshold",
                "--n-grid", "100", "--beta-list", "0,0.1",
                "--engines", "analytic", "--seed", "3"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        fa = out1 / "rate-vs-N-fading-threshold.csv"
        fb = out2 / "rate-vs-N-fading-threshold.csv"
        assert fa.read_bytes() == fb.read_bytes()
        assert len(fa.read_text().splitlines()) > 1

    def test_cli_config_file_applies(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[sweep]\nn_grid = 100\nbeta_list = 0\n"
                       "[run]\nengines = analytic\n")
        out = tmp_path / "o"
        rc = main(["run", "--preset", "ps-vs-N-pl-threshold",
                   "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        lines = (out / "ps-vs-N-pl-threshold.csv").read_text().splitlines()
        assert all(",100," in ln or ln.startswith("engine") for ln in lines)

    def test_cli_requires_preset(self, capsys):
        assert main(["run"]) == 2

    def test_plot_script_emitted(self, tmp_path):
        out = tmp_path / "p"
        rc = main(["run", "--preset", "ps-vs-N-pl-threshold",
                   "--n-grid", "100", "--beta-list", "0",
                   "--engines", "analytic", "--out", str(out), "--plot-script"])
        assert rc == 0
        assert (out / "ps-vs-N-pl-threshold.gp").exists()


def test_agreement_report():
    rows = [
        ResultRow("analytic", "s", 100, 0.0, 0.0, 0.5, 1.0),
        ResultRow("simulation", "s", 100, 0.0, 0.0, 0.53, 1.0, 0.01),
        ResultRow("simulation", "s", 200, 0.0, 0.0, 0.9, 1.0, 0.01),  # unmatched
        ResultRow("analytic", "t", 100, 0.0, 0.0, math.nan, math.nan),
        ResultRow("simulation", "t", 100, 0.0, 0.0, 0.4, 1.0, 0.01),  # nan skipped
    ]
    rep = agreement_report(rows)
    assert rep == {"s": pytest.approx(0.03)}
