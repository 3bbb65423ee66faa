import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from ..core.errors import ConfigError, DivergenceError, EmptyDistributionError
from ..core.hamiltonian import (
    acceptance_probability,
    ensure_cached,
    hamiltonian,
    leapfrog,
    leapfrog_iter,
    sample_momentum,
)
from ..core.phase_space import MassSpec, PhasePoint
from ..core.target_model import TargetModel

logger = logging.getLogger(__name__)

DEFAULT_L0 = 10
DEFAULT_K = 2000
DEFAULT_MAX_BATCH = 10_000


@dataclass(frozen=True)
class BatchDistribution:
    """Multiset of longest-batch lengths; sampled uniformly by eHMC."""

    lengths: Tuple[int, ...] = ()

    def __post_init__(self):
        """Validates the lengths after initialization."""
        lengths = tuple(int(n) for n in self.lengths)
        if any(n < 1 for n in lengths):
            raise ConfigError("Longest batch lengths must be >= 1")
        object.__setattr__(self, "lengths", lengths)

    @property
    def size(self) -> int:
        return len(self.lengths)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lengths, dtype=int)

    def mean(self) -> float:
        if not self.lengths:
            raise EmptyDistributionError("Batch distribution is empty")
        return float(np.mean(self.lengths))

    def median(self) -> int:
        """Median length, rounded up to an integer step count."""
        if not self.lengths:
            raise EmptyDistributionError("Batch distribution is empty")
        return int(math.ceil(np.median(self.lengths)))

    def __len__(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True)
class BatchLearnConfig:
    """Inputs of the longest-batch learner."""

    epsilon: float
    L0: int = DEFAULT_L0
    K: int = DEFAULT_K
    max_batch: int = DEFAULT_MAX_BATCH

    def __post_init__(self):
        """Validates the configuration after initialization."""
        if not self.epsilon > 0:
            raise ConfigError(f"Step size must be positive, got {self.epsilon}")
        for name in ("L0", "K", "max_batch"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.max_batch < self.L0:
            raise ConfigError("max_batch must be at least L0")


class LongestBatch(NamedTuple):
    """Result of a longest-batch search."""

    point: PhasePoint
    length: int
    capped: bool


def uturn_statistic(mass: MassSpec, theta0: np.ndarray, p: PhasePoint) -> float:
    """(theta - theta0) . M^-1 v; negative once the path turns back."""
    return float(np.dot(p.theta - theta0, mass.inverse_apply(p.v)))


def longest_batch(
    model: TargetModel,
    mass: MassSpec,
    p: PhasePoint,
    eps: float,
    L: int,
    max_batch: int = DEFAULT_MAX_BATCH,
) -> LongestBatch:
    """Integrates from p until the first U-turn.

    The batch length is the first step count l with (theta_l - theta) . M^-1 v_l < 0,
    capped at max_batch. The returned point is the state after L steps when
    l >= L, otherwise the state after l steps.

    Args:
        model: Target providing U and its gradient
        mass: Momentum covariance
        p: Starting phase point
        eps: Step size
        L: Number of steps of the surrounding HMC move, L >= 1
        max_batch: Cap on the batch length

    Returns:
        LongestBatch(point, length, capped)

    Raises:
        ConfigError: If eps <= 0 or L < 1
        DivergenceError: If the integration diverges
    """
    if not eps > 0:
        raise ConfigError(f"Step size must be positive, got {eps}")
    if L < 1:
        raise ConfigError(f"L must be >= 1, got {L}")

    snapshot = None
    current = p
    length = 0
    for current in leapfrog_iter(model, mass, p, eps, max_batch):
        length += 1
        if length == L:
            snapshot = current
        if uturn_statistic(mass, p.theta, current) < 0:
            return LongestBatch(current if snapshot is None else snapshot, length, False)

    return LongestBatch(current if snapshot is None else snapshot, length, True)


def learn_batch_distribution(
    model: TargetModel,
    mass: MassSpec,
    theta0: np.ndarray,
    cfg: BatchLearnConfig,
    rng: np.random.Generator,
    on_iteration: Optional[Callable[[int, PhasePoint], None]] = None,
) -> Tuple[BatchDistribution, np.ndarray]:
    """Runs K iterations of fixed-length HMC and records each longest batch.

    Each iteration draws a momentum, searches the longest batch from the
    current state, completes the trajectory to L0 steps if the U-turn came
    earlier, and accepts the endpoint with the usual Metropolis ratio.
    Rejected proposals still contribute their batch length; a divergent
    trajectory contributes the steps completed before divergence (at least 1)
    and leaves the state unchanged.

    Args:
        model: Target providing U and its gradient
        mass: Momentum covariance
        theta0: Starting position
        cfg: Learner configuration
        rng: Random generator
        on_iteration: Called after each iteration with (k, state of the chain)

    Returns:
        (BatchDistribution with K entries, final position of the chain)
    """
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (model.dim,):
        raise ConfigError(f"Starting point must have length {model.dim}")

    current = ensure_cached(model, PhasePoint(theta0, np.zeros(model.dim)))
    lengths = []
    n_capped = 0
    n_divergent = 0
    n_accepted = 0

    for k in range(cfg.K):
        start = current.with_momentum(sample_momentum(mass, model.dim, rng))
        h_start = hamiltonian(model, mass, start).total

        try:
            batch = longest_batch(model, mass, start, cfg.epsilon, cfg.L0, cfg.max_batch)
        except DivergenceError as e:
            lengths.append(max(1, e.step - 1))
            n_divergent += 1
            batch = None

        if batch is not None:
            lengths.append(batch.length)
            n_capped += batch.capped

            proposal = batch.point
            try:
                if batch.length < cfg.L0:
                    proposal = leapfrog(
                        model, mass, proposal, cfg.epsilon, cfg.L0 - batch.length
                    )
                h_end = hamiltonian(model, mass, proposal.flipped()).total
                rho = acceptance_probability(h_start, h_end)
            except DivergenceError:
                n_divergent += 1
                rho = 0.0

            if rng.uniform() < rho:
                current = proposal
                n_accepted += 1

        if on_iteration is not None:
            on_iteration(k, current)

    if n_capped:
        logger.warning(
            "%d of %d longest batches reached the cap of %d steps",
            n_capped,
            cfg.K,
            cfg.max_batch,
        )
    logger.info(
        "Learned %d longest batches (mean %.1f, acceptance %.2f, %d divergent)",
        cfg.K,
        float(np.mean(lengths)),
        n_accepted / cfg.K,
        n_divergent,
    )
    return BatchDistribution(tuple(lengths)), current.theta.copy()


def sample_batch(dist: BatchDistribution, rng: np.random.Generator) -> int:
    """Draws one length uniformly from the stored multiset."""
    if dist.size == 0:
        raise EmptyDistributionError("Cannot sample from an empty batch distribution")
    return dist.lengths[int(rng.integers(dist.size))]
