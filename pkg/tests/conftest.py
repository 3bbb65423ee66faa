import numpy as np
import pytest

from ehmc_bench.core import MassSpec, PhasePoint
from ehmc_bench.core.experiment import ExperimentSpec
from ehmc_bench.persistence import ResultStore
from ehmc_bench.targets import FlatModel, MvnModel
from ehmc_bench.tuning import BatchDistribution


@pytest.fixture
def rng():
    """Creates a seeded random generator.

    Returns:
        numpy Generator with a fixed seed
    """
    return np.random.default_rng(20240611)


@pytest.fixture
def identity_mass():
    """Identity mass matrix."""
    return MassSpec.identity()


@pytest.fixture
def std_normal():
    """One-dimensional standard normal target.

    Returns:
        MvnModel with d = 1
    """
    return MvnModel(1, 0.0)


@pytest.fixture
def mvn_model():
    """Small correlated normal target, cheap enough for statistical tests.

    Returns:
        MvnModel with d = 5 and rho = 0.5
    """
    return MvnModel(5, 0.5)


@pytest.fixture
def flat_model():
    """Free particle target (U = 0) in two dimensions."""
    return FlatModel(2)


@pytest.fixture
def unit_point():
    """Phase point (theta, v) = (0, 1) in one dimension."""
    return PhasePoint(np.zeros(1), np.ones(1))


@pytest.fixture
def singleton_dist():
    """Batch distribution holding the single length 5."""
    return BatchDistribution((5,))


@pytest.fixture
def result_store(tmp_path):
    """Creates a ResultStore writing into a temporary directory.

    Args:
        tmp_path: Pytest temporary directory fixture

    Returns:
        ResultStore instance
    """
    return ResultStore(data_dir=tmp_path / "data")


@pytest.fixture
def small_spec():
    """A benchmark grid small enough to run in a few seconds.

    Returns:
        ExperimentSpec for a 3-dimensional MVN with 2 p0 values and 2 reps
    """
    return ExperimentSpec(
        model="mvn",
        model_params={"d": 3, "rho": 0.5},
        samplers=("ehmc", "hmc-fixed"),
        p0_grid=(0.7, 0.9),
        warmup=150,
        batch_iters=50,
        iters=200,
        reps=2,
        seed=7,
    )


@pytest.fixture
def sample_results():
    """Result rows of a finished run with two samplers, two p0 values and two reps.

    Returns:
        List of row dictionaries
    """
    rows = []
    values = {
        ("ehmc", 0.7): (0.010, 0.030),
        ("ehmc", 0.9): (0.020, 0.040),
        ("prhmc", 0.7): (0.050, 0.010),
        ("prhmc", 0.9): (0.030, 0.070),
    }
    for (sampler, p0), per_rep in values.items():
        for rep, value in enumerate(per_rep):
            rows.append(
                {
                    "model": "mvn",
                    "sampler": sampler,
                    "p0": p0,
                    "rep": rep,
                    "seed": 0,
                    "status": "ok",
                    "reason": "",
                    "min_ess_per_grad": value,
                    "esjd_per_grad": 2 * value,
                    "min_ess_per_grad[theta]": value,
                    "esjd_per_grad[theta]": 2 * value,
                }
            )
    return rows


# CliRunner provided by click.testing module
# See: https://click.palletsprojects.com/en/stable/testing/
@pytest.fixture
def cli_runner():
    """Creates Click testing runner.

    Returns:
        Click CliRunner instance
    """
    from click.testing import CliRunner

    return CliRunner()


# Monkey patching the default data directory with a temporary one
# See: https://docs.pytest.org/en/stable/how-to/monkeypatch.html
@pytest.fixture
def isolated_cli_runner(monkeypatch, tmp_path):
    """Creates isolated Click testing runner with a temporary data directory.

    Args:
        monkeypatch: Pytest monkeypatch fixture
        tmp_path: Pytest temporary directory fixture

    Returns:
        Click CliRunner instance with isolated environment
    """
    import sys
    from click.testing import CliRunner

    # Import the module to ensure it's loaded, then access via sys.modules
    import ehmc_bench.cli.main

    cli_main_module = sys.modules["ehmc_bench.cli.main"]

    def get_fresh_store():
        """Get a fresh ResultStore for this test."""
        return ResultStore(data_dir=tmp_path / "data")

    monkeypatch.setattr(cli_main_module, "get_store", get_fresh_store)
    cli_main_module._store = None
    monkeypatch.chdir(tmp_path)

    return CliRunner()
