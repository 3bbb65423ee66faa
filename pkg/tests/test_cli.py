import numpy as np
import pandas as pd
import pytest

import ehmc_bench.core.experiment as experiment
from ehmc_bench.cli import main
from ehmc_bench.core import AdaptationError, MassKind, MassSpec
from ehmc_bench.persistence import ResultStore, load_sv_csv

MODEL_PARAMS = ["--param", "d=2", "--param", "rho=0.5"]

# Small enough for a run to finish in about a second
SMALL_RUN = [
    "run",
    *MODEL_PARAMS,
    "--p0",
    "0.8",
    "--reps",
    "1",
    "--warmup",
    "60",
    "--batch-iters",
    "20",
    "--iters",
    "100",
]


class TestCLIRun:
    """Tests the 'run' command."""

    def test_run_writes_results(self, isolated_cli_runner, tmp_path):
        """Tests that a run writes one row per sampler."""
        result = isolated_cli_runner.invoke(
            main, SMALL_RUN + ["--sampler", "ehmc", "--sampler", "hmc-fixed"]
        )

        assert result.exit_code == 0
        assert "✓ Wrote 2 rows to results.csv" in result.output

        frame = pd.read_csv(tmp_path / "results.csv")
        assert list(frame["sampler"]) == ["ehmc", "hmc-fixed"]
        assert (frame["status"] == "ok").all()

    def test_run_json(self, isolated_cli_runner, tmp_path):
        """Tests the JSON output format."""
        result = isolated_cli_runner.invoke(
            main, SMALL_RUN + ["--format", "json", "--out", "out/results.json"]
        )

        assert result.exit_code == 0
        assert (tmp_path / "out" / "results.json").is_file()

    def test_run_invalid_sampler(self, isolated_cli_runner):
        """Tests that an unknown sampler is refused by the option parser."""
        result = isolated_cli_runner.invoke(main, SMALL_RUN + ["--sampler", "nuts"])

        assert result.exit_code != 0
        assert "Invalid value for" in result.output

    def test_run_invalid_setting(self, isolated_cli_runner):
        """Tests that an invalid grid setting exits with an error."""
        result = isolated_cli_runner.invoke(main, SMALL_RUN + ["--p0", "1.5"])

        assert result.exit_code == 1
        assert "✗ Error: Every p0 must lie in (0, 1)" in result.output

    def test_run_failed_cells_exit_nonzero(self, isolated_cli_runner, monkeypatch):
        """Tests that failed cells are listed and the exit status is 1."""

        def failing(*args, **kwargs):
            raise AdaptationError("every warmup iteration diverged")

        monkeypatch.setattr(experiment, "tune_step_size", failing)
        result = isolated_cli_runner.invoke(main, SMALL_RUN)

        assert result.exit_code == 1
        assert "✓ Wrote 1 rows to results.csv" in result.output
        assert "✗ 1 of 1 rows failed:" in result.output
        assert "AdaptationError: every warmup iteration diverged" in result.output

    def test_run_dump_chains_default_directory(self, isolated_cli_runner, tmp_path):
        """Tests that --dump-chains without a value writes under the data directory."""
        result = isolated_cli_runner.invoke(main, SMALL_RUN + ["--dump-chains"])

        assert result.exit_code == 0
        assert (tmp_path / "data" / "chains" / "mvn_ehmc_p00.80_rep0.csv").is_file()

    def test_config_file_defaults(self, isolated_cli_runner, tmp_path):
        """Tests that a TOML file supplies defaults and flags override them."""
        config = tmp_path / "bench.toml"
        config.write_text(
            "reps = 1\n"
            "\n"
            "[run]\n"
            "p0 = 0.8\n"
            "warmup = 60\n"
            "batch-iters = 20\n"
            "iters = 100\n"
            "\n"
            "[run.param]\n"
            "d = 2\n"
            "rho = 0.5\n"
        )
        result = isolated_cli_runner.invoke(
            main, ["--config", str(config), "run", "--iters", "80"]
        )

        assert result.exit_code == 0
        frame = pd.read_csv(tmp_path / "results.csv")
        assert len(frame) == 1
        assert frame.loc[0, "p0"] == 0.8
        assert frame.loc[0, "n_draws"] == 80

    def test_bad_config_file(self, isolated_cli_runner, tmp_path):
        """Tests that an unparsable config file is reported."""
        config = tmp_path / "bench.toml"
        config.write_text("reps = = 1\n")
        result = isolated_cli_runner.invoke(main, ["--config", str(config), "run"])

        assert result.exit_code != 0
        assert "Cannot read config file" in result.output

    def test_shared_config_key_for_single_valued_option(self, isolated_cli_runner, tmp_path):
        """Tests that a top-level p0 and sampler reach commands taking one value."""
        config = tmp_path / "bench.toml"
        config.write_text(
            "p0 = 0.8\n"
            "sampler = [\"ehmc\", \"hmc-fixed\"]\n"
            "warmup = 60\n"
            "\n"
            "[param]\n"
            "d = 2\n"
            "rho = 0.5\n"
        )
        result = isolated_cli_runner.invoke(main, ["--config", str(config), "tune"])

        assert result.exit_code == 0
        assert "✗" not in result.output
        assert "(target 0.80)" in result.output

        result = isolated_cli_runner.invoke(
            main,
            ["--config", str(config), "run", "--reps", "1", "--batch-iters", "20"]
            + ["--iters", "100"],
        )
        assert result.exit_code == 0
        frame = pd.read_csv(tmp_path / "results.csv")
        assert list(frame["sampler"]) == ["ehmc", "hmc-fixed"]
        assert (frame["p0"] == 0.8).all()

    def test_run_unknown_model_parameter(self, isolated_cli_runner):
        """Tests that a mistyped model parameter stops the run."""
        result = isolated_cli_runner.invoke(main, SMALL_RUN + ["--param", "dd=5"])

        assert result.exit_code == 1
        assert "✗ Error: Unknown parameter for model mvn: dd" in result.output

    def test_run_sv_cross_check(self, isolated_cli_runner):
        """Tests that the sv potential cross-check prints its deviation."""
        result = isolated_cli_runner.invoke(
            main,
            ["run", "--model", "sv", "--param", "T=10", "--sv-cross-check", "--p0", "0.8"]
            + ["--reps", "1", "--warmup", "60", "--batch-iters", "20", "--iters", "50"],
        )

        assert "✓ SV potential cross-check: max deviation" in result.output

    def test_sv_cross_check_needs_sv_model(self, isolated_cli_runner):
        """Tests that the cross-check is refused for other models."""
        result = isolated_cli_runner.invoke(main, SMALL_RUN + ["--sv-cross-check"])

        assert result.exit_code == 1
        assert "needs the sv model" in result.output


class TestCLIPipeline:
    """Tests the tune, learn-batches, sample and report commands."""

    def test_tune(self, isolated_cli_runner):
        """Tests that tuning prints the step size and gradient count."""
        result = isolated_cli_runner.invoke(
            main, ["tune", *MODEL_PARAMS, "--warmup", "100", "--p0", "0.7"]
        )

        assert result.exit_code == 0
        assert "✓ eps = " in result.output
        assert "(target 0.70)" in result.output
        assert "gradient calls" in result.output

    def test_tune_bad_param(self, isolated_cli_runner):
        """Tests that a parameter without a value is reported."""
        result = isolated_cli_runner.invoke(main, ["tune", "--param", "d"])

        assert "✗ Error:" in result.output
        assert "Expected key=value" in result.output

    def test_learn_batches(self, isolated_cli_runner, tmp_path):
        """Tests that learned lengths are written as CSV."""
        result = isolated_cli_runner.invoke(
            main, ["learn-batches", *MODEL_PARAMS, "--eps", "0.4", "--batch-iters", "20"]
        )

        assert result.exit_code == 0
        assert "✓ Wrote 20 batch lengths to batches.csv" in result.output
        assert ResultStore().read_batches(tmp_path / "batches.csv").size == 20

    def test_sample_and_report(self, isolated_cli_runner, tmp_path):
        """Tests sampling from learned batches, then reporting the stored chain."""
        isolated_cli_runner.invoke(
            main, ["learn-batches", *MODEL_PARAMS, "--eps", "0.4", "--batch-iters", "20"]
        )
        result = isolated_cli_runner.invoke(
            main,
            ["sample", *MODEL_PARAMS, "--eps", "0.4", "--batches", "batches.csv"]
            + ["--iters", "100"],
        )

        assert result.exit_code == 0
        assert "✓ Wrote 100 draws to chain.csv" in result.output
        assert "min_ess_per_grad" in result.output

        chain = ResultStore().read_chain(tmp_path / "chain.csv")
        assert chain.shape == (100, 2)

        result = isolated_cli_runner.invoke(
            main, ["report", "chain.csv", *MODEL_PARAMS, "--grad-calls", "1000"]
        )
        assert result.exit_code == 0
        assert "📈 Report for chain.csv" in result.output
        assert "grad_calls" in result.output

    def test_sample_needs_batches_for_ehmc(self, isolated_cli_runner):
        """Tests that eHMC without a batch file reports an error."""
        result = isolated_cli_runner.invoke(main, ["sample", "--eps", "0.4", "--iters", "20"])

        assert "✗ Error:" in result.output
        assert "needs a learned batch distribution" in result.output

    def test_sample_fixed_hmc(self, isolated_cli_runner):
        """Tests that baseline HMC runs from an explicit length."""
        result = isolated_cli_runner.invoke(
            main,
            ["sample", *MODEL_PARAMS, "--eps", "0.4", "--sampler", "hmc-fixed"]
            + ["--l-fixed", "5", "--iters", "50"],
        )

        assert result.exit_code == 0
        assert "✓ Wrote 50 draws to chain.csv" in result.output

    def test_tune_diag_mass_feeds_later_stages(self, isolated_cli_runner, tmp_path):
        """Tests that the adapted diagonal is written and used by learning and sampling."""
        result = isolated_cli_runner.invoke(
            main, ["tune", *MODEL_PARAMS, "--warmup", "100", "--mass", "diag"]
        )

        assert result.exit_code == 0
        assert "✓ Wrote the adapted mass to mass.json" in result.output
        mass = ResultStore().read_mass(tmp_path / "mass.json")
        assert mass.kind == MassKind.DIAGONAL
        assert mass.diag.shape == (2,)

        mass_file = ["--mass-file", "mass.json"]
        result = isolated_cli_runner.invoke(
            main,
            ["learn-batches", *MODEL_PARAMS, "--eps", "0.4", "--batch-iters", "20", *mass_file],
        )
        assert result.exit_code == 0
        assert "✓ Wrote 20 batch lengths" in result.output

        result = isolated_cli_runner.invoke(
            main,
            ["sample", *MODEL_PARAMS, "--eps", "0.4", "--batches", "batches.csv"]
            + ["--iters", "50", *mass_file],
        )
        assert result.exit_code == 0
        assert "✓ Wrote 50 draws to chain.csv" in result.output

    def test_tune_identity_mass_writes_no_file(self, isolated_cli_runner, tmp_path):
        """Tests that only a diagonal adaptation produces a mass file."""
        isolated_cli_runner.invoke(main, ["tune", *MODEL_PARAMS, "--warmup", "50"])
        assert not (tmp_path / "mass.json").exists()

    def test_mass_file_dimension_mismatch(self, isolated_cli_runner, tmp_path):
        """Tests that a mass of the wrong length is reported."""
        ResultStore().write_mass(MassSpec.diagonal([1.0, 2.0, 3.0]), tmp_path / "mass.json")
        result = isolated_cli_runner.invoke(
            main,
            ["sample", *MODEL_PARAMS, "--eps", "0.4", "--sampler", "hmc-fixed"]
            + ["--l-fixed", "3", "--iters", "20", "--mass-file", "mass.json"],
        )

        assert "✗ Error: Mass diagonal has length 3, expected 2" in result.output

    def test_report_requires_grad_calls(self, isolated_cli_runner, tmp_path):
        """Tests that the gradient count is a required option."""
        ResultStore().write_chain(np.zeros((20, 2)), "chain", tmp_path)
        result = isolated_cli_runner.invoke(main, ["report", "chain.csv"])

        assert result.exit_code != 0
        assert "--grad-calls" in result.output


class TestCLISummarize:
    """Tests the 'summarize' command."""

    def test_summarize(self, isolated_cli_runner, sample_results, tmp_path):
        """Tests the printed table and the optional CSV outputs."""
        ResultStore().write_results(sample_results, tmp_path / "results.csv")
        result = isolated_cli_runner.invoke(
            main, ["summarize", "results.csv", "--out", "summary.csv", "--curves", "curves.csv"]
        )

        assert result.exit_code == 0
        assert "📊 Min ESS per gradient (x 10^-2)" in result.output
        assert "3.00 ± 1.41" in result.output
        assert (tmp_path / "summary.csv").is_file()
        assert len(pd.read_csv(tmp_path / "curves.csv")) == 8

    def test_summarize_mentions_failed_rows(self, isolated_cli_runner, sample_results, tmp_path):
        """Tests that failed rows are left out and counted."""
        sample_results[0].update(status="failed", reason="ModelError: bad start")
        ResultStore().write_results(sample_results, tmp_path / "results.csv")
        result = isolated_cli_runner.invoke(main, ["summarize", "results.csv"])

        assert result.exit_code == 0
        assert "1 failed rows were left out" in result.output


class TestCLISimulate:
    """Tests the 'simulate' command."""

    def test_simulate_sv(self, isolated_cli_runner, tmp_path):
        """Tests writing a synthetic volatility series."""
        result = isolated_cli_runner.invoke(
            main, ["simulate", "sv", "--out", "sv.csv", "--param", "T=30"]
        )

        assert result.exit_code == 0
        assert "✓ Wrote sv data to sv.csv" in result.output
        assert load_sv_csv(tmp_path / "sv.csv").T == 30

    @pytest.mark.parametrize("kind", ["irt", "logistic"])
    def test_simulate_other_kinds(self, isolated_cli_runner, tmp_path, kind):
        """Tests that every kind writes a readable file."""
        result = isolated_cli_runner.invoke(main, ["simulate", kind, "--out", f"{kind}.csv"])

        assert result.exit_code == 0
        assert (tmp_path / f"{kind}.csv").is_file()
