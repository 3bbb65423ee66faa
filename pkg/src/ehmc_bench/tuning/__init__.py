from .uturn import (
    DEFAULT_L0,
    DEFAULT_MAX_BATCH,
    BatchDistribution,
    BatchLearnConfig,
    LongestBatch,
    learn_batch_distribution,
    longest_batch,
    sample_batch,
    uturn_statistic,
)
from .step_size import (
    DualAveragingConfig,
    DualAveragingState,
    TuningResult,
    da_update,
    init_epsilon,
    tune_step_size,
)

__all__ = [
    "DEFAULT_L0",
    "DEFAULT_MAX_BATCH",
    "BatchDistribution",
    "BatchLearnConfig",
    "LongestBatch",
    "learn_batch_distribution",
    "longest_batch",
    "sample_batch",
    "uturn_statistic",
    "DualAveragingConfig",
    "DualAveragingState",
    "TuningResult",
    "da_update",
    "init_epsilon",
    "tune_step_size",
]
