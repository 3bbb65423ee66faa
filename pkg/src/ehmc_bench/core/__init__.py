from .errors import (
    AdaptationError,
    CacheOverflowError,
    ConfigError,
    DataFormatError,
    DivergenceError,
    DivergentValueError,
    EhmcError,
    EmptyDistributionError,
    ModelError,
    SamplerWarning,
    UndefinedESSError,
)
from .phase_space import HamiltonianValue, MassKind, MassSpec, PhasePoint
from .target_model import TargetModel
from .hamiltonian import (
    DIVERGENCE_THRESHOLD,
    ensure_cached,
    acceptance_probability,
    hamiltonian,
    is_divergent,
    leapfrog,
    leapfrog_iter,
    leapfrog_path,
    sample_momentum,
)

__all__ = [
    "AdaptationError",
    "CacheOverflowError",
    "ConfigError",
    "DataFormatError",
    "DivergenceError",
    "DivergentValueError",
    "EhmcError",
    "EmptyDistributionError",
    "ModelError",
    "SamplerWarning",
    "UndefinedESSError",
    "HamiltonianValue",
    "MassKind",
    "MassSpec",
    "PhasePoint",
    "TargetModel",
    "DIVERGENCE_THRESHOLD",
    "ensure_cached",
    "acceptance_probability",
    "hamiltonian",
    "is_divergent",
    "leapfrog",
    "leapfrog_iter",
    "leapfrog_path",
    "sample_momentum",
]
