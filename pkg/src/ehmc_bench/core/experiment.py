import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..analytics.diagnostics import build_report
from ..persistence.results_store import ResultStore
from ..samplers import SamplerConfig, SamplerKind, run_ehmc, run_sampler
from ..targets import StochasticVolatilityModel, get_model, sv_cross_check
from ..tuning import BatchLearnConfig, learn_batch_distribution, tune_step_size
from ..tuning.uturn import DEFAULT_MAX_BATCH
from .errors import ConfigError
from .phase_space import MassSpec
from .target_model import TargetModel

logger = logging.getLogger(__name__)

DEFAULT_P0_GRID = (0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
KS_REFERENCES = ("analytic", "ehmc", "none")
MASS_CHOICES = ("identity", "diag")
BASELINES = (SamplerKind.HMC_FIXED, SamplerKind.HMC_JITTER)

# An empirical KS reference runs eHMC at this target, this many times longer
REFERENCE_P0 = 0.95
REFERENCE_LENGTH_FACTOR = 10

# Spawn keys of the streams derived from the root seed
_DATA_STREAM = 0
_CELL_STREAM = 1
_REFERENCE_STREAM = 2
_CROSS_CHECK_STREAM = 3

ROW_COLUMNS = [
    "model",
    "sampler",
    "p0",
    "rep",
    "seed",
    "status",
    "reason",
    "eps",
    "L_fixed",
    "batch_median",
    "batch_mean",
    "warmup_grad_calls",
    "learn_grad_calls",
    "production_grad_calls",
    "n_draws",
    "grad_calls",
    "accept_rate",
    "mean_accept_prob",
    "min_ess_per_grad",
    "esjd_per_grad",
    "max_ks",
    "divergences",
    "n_refresh",
    "longest_cache",
]


@dataclass
class ExperimentSpec:
    """Grid and phase lengths of a benchmark run.

    Cells are the (p0, rep) pairs; every sampler in ``samplers`` runs in each
    cell from the same tuned step size and learned batch distribution.
    """

    model: str = "mvn"
    model_params: Dict[str, Any] = field(default_factory=dict)
    data_path: Optional[Path] = None
    samplers: Tuple[str, ...] = ("ehmc",)
    p0_grid: Tuple[float, ...] = DEFAULT_P0_GRID
    warmup: int = 2000
    batch_iters: int = 1000
    iters: int = 10_000
    reps: int = 5
    seed: int = 0
    eta: float = 0.5
    L0: int = 10
    L_fixed: Optional[int] = None
    path_divisor: int = 3
    max_batch: int = DEFAULT_MAX_BATCH
    mass: str = "identity"
    grad_budget: Optional[int] = None
    ks_reference: str = "analytic"
    dump_chains: Optional[Path] = None
    jobs: int = 1

    def __post_init__(self):
        """Validates the specification after initialization."""
        self.samplers = tuple(self.samplers)
        self.p0_grid = tuple(float(p) for p in self.p0_grid)

        if not self.samplers:
            raise ConfigError("At least one sampler is required")
        for name in self.samplers:
            try:
                SamplerKind(name)
            except ValueError:
                raise ConfigError(
                    f"Invalid sampler: {name}. Must be one of "
                    f"{', '.join(k.value for k in SamplerKind)}"
                )
        if not self.p0_grid:
            raise ConfigError("The p0 grid must not be empty")
        if any(not 0 < p < 1 for p in self.p0_grid):
            raise ConfigError(f"Every p0 must lie in (0, 1), got {self.p0_grid}")
        for name in ("warmup", "batch_iters", "iters", "reps", "L0", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.mass not in MASS_CHOICES:
            raise ConfigError(f"Invalid mass: {self.mass}. Must be 'identity' or 'diag'")
        if self.ks_reference not in KS_REFERENCES:
            raise ConfigError(
                f"Invalid KS reference: {self.ks_reference}. "
                f"Must be one of {', '.join(KS_REFERENCES)}"
            )
        if not 0 < self.eta <= 1:
            raise ConfigError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def cells(self) -> List[Tuple[float, int]]:
        """(p0, rep) pairs in output order."""
        return [(p0, rep) for p0 in self.p0_grid for rep in range(self.reps)]


def cell_seed(root: int, p0: float, rep: int) -> np.random.SeedSequence:
    """Stream of one cell, keyed by its (p0, rep) rather than its position.

    Adding cells to the grid leaves the streams of existing cells unchanged.
    """
    digest = hashlib.blake2b(f"{p0:.6f}/{rep}".encode(), digest_size=8).digest()
    key = int.from_bytes(digest, "big")
    return np.random.SeedSequence(root, spawn_key=(_CELL_STREAM, key))


def build_model(spec: ExperimentSpec) -> TargetModel:
    """Builds the model; synthetic data comes from the root seed's data stream."""
    seq = np.random.SeedSequence(spec.seed, spawn_key=(_DATA_STREAM,))
    data_rng = np.random.default_rng(seq)
    return get_model(spec.model, data_path=spec.data_path, rng=data_rng, **spec.model_params)


def _empty_row(spec: ExperimentSpec, model: TargetModel, sampler: str, p0: float, rep: int):
    row = dict.fromkeys(ROW_COLUMNS)
    row.update(model=model.name, sampler=sampler, p0=p0, rep=rep, seed=spec.seed)
    return row


class BenchmarkRunner:
    """Service layer that runs benchmark cells and collects their result rows."""

    def __init__(self, store: Optional[ResultStore] = None):
        """Initializes the runner.

        Args:
            store: ResultStore used for chain dumps
        """
        self.store = store or ResultStore()

    def build_reference(self, spec: ExperimentSpec, model: TargetModel):
        """KS reference per component, or None when none is requested or available."""
        if spec.ks_reference == "none":
            return None
        if spec.ks_reference == "analytic":
            cdfs = model.marginal_cdfs()
            if cdfs is None:
                logger.info("%s has no analytic marginals; KS columns stay empty", model.name)
            return cdfs

        seq = np.random.SeedSequence(spec.seed, spawn_key=(_REFERENCE_STREAM,))
        tune_rng, learn_rng, init_rng, run_rng = (
            np.random.default_rng(s) for s in seq.spawn(4)
        )
        ref_model = model.fresh()
        mass = MassSpec.identity()
        tuning = tune_step_size(
            ref_model,
            mass,
            ref_model.initial_point(init_rng),
            REFERENCE_P0,
            spec.warmup,
            spec.L0,
            tune_rng,
            adapt_mass=spec.mass == "diag",
        )
        dist, theta = learn_batch_distribution(
            ref_model,
            tuning.mass,
            tuning.theta,
            BatchLearnConfig(tuning.eps, spec.L0, spec.batch_iters, spec.max_batch),
            learn_rng,
        )
        cfg = SamplerConfig(eps=tuning.eps, iters=REFERENCE_LENGTH_FACTOR * spec.iters)
        result = run_ehmc(ref_model, tuning.mass, theta, dist, cfg, run_rng)
        logger.info("Built an eHMC reference chain of %d draws", result.n_draws)
        return result.chain

    def cross_check(self, spec: ExperimentSpec, model: Optional[TargetModel] = None) -> float:
        """Compares the stochastic volatility potential with its re-derivation.

        Returns:
            Largest deviation beyond a constant; discrepancies are logged

        Raises:
            ConfigError: If the model is not the stochastic volatility model
        """
        model = model if model is not None else build_model(spec)
        if not isinstance(model, StochasticVolatilityModel):
            raise ConfigError(f"The potential cross-check needs the sv model, got {model.name}")
        seq = np.random.SeedSequence(spec.seed, spawn_key=(_CROSS_CHECK_STREAM,))
        deviation = sv_cross_check(model.data, np.random.default_rng(seq))
        logger.info("SV potential cross-check: max deviation %.3g", deviation)
        return deviation

    def run_cell(
        self,
        spec: ExperimentSpec,
        model: TargetModel,
        p0: float,
        rep: int,
        reference=None,
    ) -> List[Dict[str, Any]]:
        """Tunes, learns and samples one (p0, rep) cell.

        Every sampler of the experiment starts from the same tuned state and uses the
        same production stream. Failures become rows with status 'failed'.

        Returns:
            One row per sampler, in the order of ``spec.samplers``
        """
        model = model.fresh()
        seq = cell_seed(spec.seed, p0, rep)
        tune_seq, learn_seq, init_seq, production_seq = seq.spawn(4)

        if spec.ks_reference == "analytic":
            reference = model.marginal_cdfs()

        try:
            tuning = tune_step_size(
                model,
                MassSpec.identity(),
                model.initial_point(np.random.default_rng(init_seq)),
                p0,
                spec.warmup,
                spec.L0,
                np.random.default_rng(tune_seq),
                adapt_mass=spec.mass == "diag",
            )
            warmup_calls = model.grad_calls

            dist, theta = learn_batch_distribution(
                model,
                tuning.mass,
                tuning.theta,
                BatchLearnConfig(tuning.eps, spec.L0, spec.batch_iters, spec.max_batch),
                np.random.default_rng(learn_seq),
            )
            learn_calls = model.grad_calls - warmup_calls
        except Exception as e:
            logger.error("Cell p0=%.2f rep=%d failed during adaptation: %s", p0, rep, e)
            rows = []
            for sampler in spec.samplers:
                row = _empty_row(spec, model, sampler, p0, rep)
                row.update(status="failed", reason=f"{type(e).__name__}: {e}")
                rows.append(row)
            return rows

        rows = []
        for sampler in spec.samplers:
            row = _empty_row(spec, model, sampler, p0, rep)
            row.update(
                eps=tuning.eps,
                batch_median=dist.median(),
                batch_mean=dist.mean(),
                warmup_grad_calls=warmup_calls,
                learn_grad_calls=learn_calls,
            )
            try:
                L_fixed = spec.L_fixed or dist.median()
                cfg = SamplerConfig(
                    eps=tuning.eps,
                    sampler=sampler,
                    iters=spec.iters,
                    L_fixed=L_fixed,
                    eta=spec.eta,
                    path_divisor=spec.path_divisor,
                    max_grad_calls=spec.grad_budget,
                )
                before = model.grad_calls
                result = run_sampler(
                    model, tuning.mass, theta, cfg, np.random.default_rng(production_seq), dist
                )
                report = build_report(result, model, reference)
                row.update(report.to_dict())
                row.update(
                    status="ok",
                    reason="",
                    L_fixed=L_fixed if cfg.sampler in BASELINES else None,
                    production_grad_calls=model.grad_calls - before,
                    n_refresh=result.extra.get("n_refresh"),
                    longest_cache=result.extra.get("longest_cache"),
                )
                if spec.dump_chains is not None:
                    name = f"{model.name}_{sampler}_p0{p0:.2f}_rep{rep}"
                    self.store.write_chain(result.chain, name, spec.dump_chains)
            except Exception as e:
                logger.error("Cell p0=%.2f rep=%d sampler %s failed: %s", p0, rep, sampler, e)
                row.update(status="failed", reason=f"{type(e).__name__}: {e}")
            rows.append(row)

        logger.info("Finished cell p0=%.2f rep=%d", p0, rep)
        return rows

    def run(self, spec: ExperimentSpec) -> pd.DataFrame:
        """Runs every cell of the grid and returns the result table.

        Rows are ordered by cell (p0 grid order, then replication) and sampler,
        whatever the number of workers.
        """
        model = build_model(spec)
        reference = None
        if spec.ks_reference == "ehmc":
            reference = self.build_reference(spec, model)

        jobs = [(spec, model, p0, rep, reference) for p0, rep in spec.cells]
        if spec.jobs > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                cell_rows = list(pool.map(self._run_job, jobs))
        else:
            cell_rows = [self._run_job(job) for job in jobs]

        rows = [row for rows in cell_rows for row in rows]
        frame = pd.DataFrame(rows)
        extra = sorted(c for c in frame.columns if c not in ROW_COLUMNS)
        return frame.reindex(columns=ROW_COLUMNS + extra)

    def _run_job(self, job) -> List[Dict[str, Any]]:
        return self.run_cell(*job)


def run_experiment(spec: ExperimentSpec, store: Optional[ResultStore] = None) -> pd.DataFrame:
    """Runs a benchmark grid; see ``BenchmarkRunner.run``."""
    return BenchmarkRunner(store).run(spec)


def n_failed(results: pd.DataFrame) -> int:
    """Number of result rows whose cell failed."""
    if results.empty:
        return 0
    return int((results["status"] != "ok").sum())
