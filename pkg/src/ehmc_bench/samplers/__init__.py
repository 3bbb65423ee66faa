from .base import (
    DEFAULT_CACHE_CAP,
    DEFAULT_ETA,
    DEFAULT_PATH_DIVISOR,
    ChainRecorder,
    ChainState,
    SamplerConfig,
    SamplerKind,
    SamplerResult,
    StepOutcome,
    hmc_step,
)
from .prhmc import PathCache, run_prhmc
from .hmc import run_baseline_hmc, run_ehmc, run_sampler

__all__ = [
    "DEFAULT_CACHE_CAP",
    "DEFAULT_ETA",
    "DEFAULT_PATH_DIVISOR",
    "ChainRecorder",
    "ChainState",
    "SamplerConfig",
    "SamplerKind",
    "SamplerResult",
    "StepOutcome",
    "hmc_step",
    "PathCache",
    "run_prhmc",
    "run_baseline_hmc",
    "run_ehmc",
    "run_sampler",
]
