import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional

import numpy as np

from ..core.errors import ConfigError, DivergenceError
from ..core.hamiltonian import (
    acceptance_probability,
    ensure_cached,
    hamiltonian,
    is_divergent,
    leapfrog,
    sample_momentum,
)
from ..core.phase_space import MassSpec, PhasePoint
from ..core.target_model import TargetModel

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.5
DEFAULT_PATH_DIVISOR = 3
DEFAULT_CACHE_CAP = 1_000_000


class SamplerKind(Enum):
    """Enum for the production samplers."""

    HMC_FIXED = "hmc-fixed"
    HMC_JITTER = "hmc-jitter"
    EHMC = "ehmc"
    PRHMC = "prhmc"


@dataclass
class SamplerConfig:
    """Settings of a production run.

    ``L_fixed`` is the trajectory length of the fixed baseline and the upper
    bound of the jittered one. ``path_divisor`` rescales prHMC lengths to
    ceil(L / path_divisor). ``max_grad_calls`` optionally stops the run once
    that many gradient evaluations have been spent.
    """

    eps: float
    sampler: SamplerKind = SamplerKind.EHMC
    iters: int = 10_000
    L_fixed: Optional[int] = None
    eta: float = DEFAULT_ETA
    path_divisor: int = DEFAULT_PATH_DIVISOR
    max_grad_calls: Optional[int] = None
    cache_cap: int = DEFAULT_CACHE_CAP

    def __post_init__(self):
        """Validates the configuration after initialization."""
        if isinstance(self.sampler, str):
            try:
                self.sampler = SamplerKind(self.sampler)
            except ValueError:
                raise ConfigError(
                    f"Invalid sampler: {self.sampler}. Must be one of "
                    f"{', '.join(k.value for k in SamplerKind)}"
                )
        if not self.eps > 0:
            raise ConfigError(f"Step size must be positive, got {self.eps}")
        if self.iters < 0:
            raise ConfigError(f"Number of iterations must be >= 0, got {self.iters}")
        if self.L_fixed is not None and self.L_fixed < 1:
            raise ConfigError(f"L_fixed must be >= 1, got {self.L_fixed}")
        if not 0 < self.eta <= 1:
            raise ConfigError(f"Refresh probability must lie in (0, 1], got {self.eta}")
        if self.path_divisor < 1:
            raise ConfigError("path_divisor must be a positive integer")
        if self.max_grad_calls is not None and self.max_grad_calls < 1:
            raise ConfigError("max_grad_calls must be positive when given")


@dataclass
class ChainState:
    """Current (theta, v) of a chain and its iteration counter."""

    point: PhasePoint
    iteration: int = 0

    @property
    def theta(self) -> np.ndarray:
        return self.point.theta

    @property
    def v(self) -> np.ndarray:
        return self.point.v

    @classmethod
    def start(cls, theta0, model: TargetModel) -> "ChainState":
        theta0 = np.asarray(theta0, dtype=float)
        if theta0.shape != (model.dim,):
            raise ConfigError(f"Starting point must have length {model.dim}")
        return cls(PhasePoint(theta0, np.zeros(model.dim)))


class StepOutcome(NamedTuple):
    """Result of one Metropolis-adjusted HMC transition."""

    state: ChainState
    accept_prob: float
    accepted: bool
    divergent: bool


@dataclass
class SamplerResult:
    """Positions and per-iteration statistics of a production run."""

    sampler: str
    eps: float
    chain: np.ndarray
    accept_probs: np.ndarray
    accepted: np.ndarray
    lengths: np.ndarray
    grad_calls: int
    divergences: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.chain.shape[0]

    @property
    def accept_rate(self) -> float:
        return float(np.mean(self.accepted)) if self.n_draws else 0.0

    @property
    def mean_accept_prob(self) -> float:
        return float(np.mean(self.accept_probs)) if self.n_draws else 0.0


class ChainRecorder:
    """Collects per-iteration output of a sampler into arrays."""

    def __init__(self, dim: int):
        self.dim = dim
        self.positions: List[np.ndarray] = []
        self.accept_probs: List[float] = []
        self.accepted: List[bool] = []
        self.lengths: List[int] = []
        self.divergences = 0

    def record(self, theta, accept_prob: float, accepted: bool, length: int, divergent: bool):
        self.positions.append(np.array(theta, dtype=float))
        self.accept_probs.append(accept_prob)
        self.accepted.append(accepted)
        self.lengths.append(length)
        self.divergences += divergent

    def result(self, sampler: str, eps: float, grad_calls: int, **extra) -> SamplerResult:
        chain = (
            np.vstack(self.positions) if self.positions else np.empty((0, self.dim))
        )
        return SamplerResult(
            sampler=sampler,
            eps=eps,
            chain=chain,
            accept_probs=np.asarray(self.accept_probs, dtype=float),
            accepted=np.asarray(self.accepted, dtype=bool),
            lengths=np.asarray(self.lengths, dtype=int),
            grad_calls=grad_calls,
            divergences=self.divergences,
            extra=extra,
        )


def hmc_step(
    state: ChainState,
    model: TargetModel,
    mass: MassSpec,
    eps: float,
    L: int,
    rng: np.random.Generator,
) -> StepOutcome:
    """One HMC transition: fresh momentum, L leapfrog steps, Metropolis test.

    The proposal (theta*, -v*) is accepted with probability
    1 ^ exp(H(theta, v) - H(theta*, -v*)). A divergent trajectory counts as a
    rejection with acceptance probability 0. Exactly one uniform is drawn
    after the momentum, whatever the outcome.

    Returns:
        StepOutcome(state, accept_prob, accepted, divergent)
    """
    if L < 1:
        raise ConfigError(f"L must be >= 1, got {L}")

    start = state.point.with_momentum(sample_momentum(mass, model.dim, rng))
    ensure_cached(model, start)
    h_start = hamiltonian(model, mass, start).total

    proposal = None
    try:
        end = leapfrog(model, mass, start, eps, L)
        proposal = end.flipped()
        h_end = hamiltonian(model, mass, proposal).total
        divergent = is_divergent(h_start, h_end)
        accept_prob = acceptance_probability(h_start, h_end)
    except DivergenceError as e:
        logger.debug("Divergent trajectory at step %d of %d", e.step, L)
        divergent = True
        accept_prob = 0.0

    accepted = bool(rng.uniform() < accept_prob)
    new_point = proposal if accepted else start
    return StepOutcome(
        ChainState(new_point, state.iteration + 1), accept_prob, accepted, divergent
    )
