import logging
from typing import Callable, Optional

import numpy as np

from ..core.errors import ConfigError, EmptyDistributionError
from ..core.phase_space import MassSpec
from ..core.target_model import TargetModel
from ..tuning.uturn import BatchDistribution, sample_batch
from .base import (
    ChainRecorder,
    ChainState,
    SamplerConfig,
    SamplerKind,
    SamplerResult,
    hmc_step,
)
from .prhmc import run_prhmc

logger = logging.getLogger(__name__)


def _run_chain(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    sampler: str,
    next_length: Callable[[np.random.Generator], int],
) -> SamplerResult:
    # separate streams keep the moves independent of how L is drawn
    length_rng, move_rng = rng.spawn(2)
    state = ChainState.start(theta0, model)
    recorder = ChainRecorder(model.dim)
    calls_at_start = model.grad_calls

    for _ in range(cfg.iters):
        if cfg.max_grad_calls is not None:
            if model.grad_calls - calls_at_start >= cfg.max_grad_calls:
                logger.info(
                    "%s stopped after %d iterations: gradient budget of %d spent",
                    sampler,
                    state.iteration,
                    cfg.max_grad_calls,
                )
                break
        L = next_length(length_rng)
        step = hmc_step(state, model, mass, cfg.eps, L, move_rng)
        state = step.state
        recorder.record(state.theta, step.accept_prob, step.accepted, L, step.divergent)

    result = recorder.result(sampler, cfg.eps, model.grad_calls - calls_at_start)
    if result.divergences:
        logger.warning(
            "%s: %d of %d iterations diverged", sampler, result.divergences, result.n_draws
        )
    return result


def run_ehmc(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    dist: BatchDistribution,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> SamplerResult:
    """Empirical HMC: each iteration runs HMC with L drawn from dist.

    L is drawn independently of the current state, from its own stream.

    Args:
        model: Target providing U and its gradient
        mass: Momentum covariance
        theta0: Starting position
        dist: Learned longest-batch lengths
        cfg: Production settings; ``cfg.iters`` iterations are run
        rng: Random generator

    Returns:
        SamplerResult with the N positions and per-iteration statistics

    Raises:
        EmptyDistributionError: If dist is empty
    """
    if dist.size == 0 and cfg.iters > 0:
        raise EmptyDistributionError("eHMC needs a non-empty batch distribution")

    return _run_chain(
        model,
        mass,
        theta0,
        cfg,
        rng,
        SamplerKind.EHMC.value,
        lambda length_rng: sample_batch(dist, length_rng),
    )


def run_baseline_hmc(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    L_fixed: int,
    jitter: bool,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> SamplerResult:
    """HMC with a fixed L, or L uniform on {1, ..., L_fixed} when jittered."""
    if L_fixed < 1:
        raise ConfigError(f"L_fixed must be >= 1, got {L_fixed}")

    if jitter:
        return _run_chain(
            model,
            mass,
            theta0,
            cfg,
            rng,
            SamplerKind.HMC_JITTER.value,
            lambda length_rng: int(length_rng.integers(1, L_fixed + 1)),
        )
    return _run_chain(
        model, mass, theta0, cfg, rng, SamplerKind.HMC_FIXED.value, lambda _: L_fixed
    )


def run_sampler(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    dist: Optional[BatchDistribution] = None,
) -> SamplerResult:
    """Dispatches on ``cfg.sampler``.

    The baselines default L_fixed to the median of dist when cfg leaves it unset.
    """
    if cfg.sampler in (SamplerKind.EHMC, SamplerKind.PRHMC) and dist is None:
        raise ConfigError(f"{cfg.sampler.value} needs a learned batch distribution")

    if cfg.sampler == SamplerKind.EHMC:
        return run_ehmc(model, mass, theta0, dist, cfg, rng)
    if cfg.sampler == SamplerKind.PRHMC:
        return run_prhmc(model, mass, theta0, dist, cfg.eta, cfg, rng)

    L_fixed = cfg.L_fixed
    if L_fixed is None:
        if dist is None:
            raise ConfigError("Baseline HMC needs L_fixed or a batch distribution")
        L_fixed = dist.median()
    return run_baseline_hmc(
        model, mass, theta0, L_fixed, cfg.sampler == SamplerKind.HMC_JITTER, cfg, rng
    )
