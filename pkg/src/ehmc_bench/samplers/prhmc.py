import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..core.errors import (
    CacheOverflowError,
    ConfigError,
    DivergenceError,
    EmptyDistributionError,
)
from ..core.hamiltonian import (
    acceptance_probability,
    ensure_cached,
    hamiltonian,
    is_divergent,
    leapfrog_path,
    sample_momentum,
)
from ..core.phase_space import MassSpec, PhasePoint
from ..core.target_model import TargetModel
from ..tuning.uturn import BatchDistribution, sample_batch
from .base import (
    DEFAULT_CACHE_CAP,
    ChainRecorder,
    SamplerConfig,
    SamplerKind,
    SamplerResult,
)

logger = logging.getLogger(__name__)


def _integrate(model, mass, p: PhasePoint, eps: float, n: int):
    # keeps every finite point when the path diverges part way
    try:
        return leapfrog_path(model, mass, p, eps, n), True
    except DivergenceError as e:
        logger.debug("Cache extension diverged at step %d of %d", e.step, n)
        return e.path, False


@dataclass
class PathCache:
    """Leapfrog orbit visited since the last momentum refresh.

    Points are stored in forward orientation: ``points[k + 1]`` is one
    leapfrog step ahead of ``points[k]``. ``i`` is the 1-based cursor of the
    chain's current state and ``sigma`` the direction of travel, so the stored
    momentum at the cursor equals sigma times the chain's momentum.
    """

    points: List[PhasePoint]
    i: int = 1
    sigma: int = 1
    cap: int = field(default=DEFAULT_CACHE_CAP, repr=False)

    def __post_init__(self):
        """Validates the cursor after initialization."""
        if not self.points:
            raise ConfigError("Path cache needs at least one point")
        if not 1 <= self.i <= len(self.points):
            raise ConfigError(f"Cursor {self.i} outside cache of length {len(self.points)}")
        if self.sigma not in (1, -1):
            raise ConfigError(f"Direction must be +1 or -1, got {self.sigma}")
        self._check_cap(0)

    def __len__(self) -> int:
        return len(self.points)

    def at(self, k: int) -> PhasePoint:
        """Stored point k (1-based)."""
        return self.points[k - 1]

    @property
    def cursor(self) -> PhasePoint:
        return self.at(self.i)

    def _check_cap(self, extra: int) -> None:
        if len(self.points) + extra > self.cap:
            raise CacheOverflowError(
                f"Path cache would hold {len(self.points) + extra} points, "
                f"more than the cap of {self.cap}"
            )

    def extend(
        self, model: TargetModel, mass: MassSpec, eps: float, n: int, forward: bool
    ) -> bool:
        """Adds n leapfrog steps beyond the last (forward) or first point.

        Backward steps integrate from the first point with flipped momentum;
        the results are flipped back and prepended, shifting the cursor.
        Only the steps completed before a divergence are kept.

        Returns:
            True if all n steps were added
        """
        self._check_cap(n)
        if forward:
            added, complete = _integrate(model, mass, self.points[-1], eps, n)
            self.points.extend(added)
        else:
            added, complete = _integrate(model, mass, self.points[0].flipped(), eps, n)
            self.points[:0] = [p.flipped() for p in reversed(added)]
            self.i += len(added)
        return complete


def run_prhmc(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    dist: BatchDistribution,
    eta: float,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    on_iteration: Optional[Callable[[int, PhasePoint, PathCache], None]] = None,
) -> SamplerResult:
    """Partially refreshed HMC with a cached leapfrog orbit.

    Each iteration draws L from dist and uses ceil(L / cfg.path_divisor)
    steps. With probability eta the momentum is refreshed and a new orbit is
    integrated from the current position; otherwise the chain moves L steps
    along the cached orbit in its current direction, integrating only the
    part not yet cached. A rejected move flips the momentum and the direction.

    Args:
        model: Target providing U and its gradient
        mass: Momentum covariance
        theta0: Starting position
        dist: Learned longest-batch lengths
        eta: Refresh probability in (0, 1]
        cfg: Production settings
        rng: Random generator
        on_iteration: Called after each iteration with (n, state, cache)

    Returns:
        SamplerResult; ``extra`` holds the number of refreshes and the
        longest cache

    Raises:
        CacheOverflowError: If the cache would exceed ``cfg.cache_cap`` points
    """
    if not 0 < eta <= 1:
        raise ConfigError(f"Refresh probability must lie in (0, 1], got {eta}")
    if dist.size == 0 and cfg.iters > 0:
        raise EmptyDistributionError("prHMC needs a non-empty batch distribution")
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (model.dim,):
        raise ConfigError(f"Starting point must have length {model.dim}")

    length_rng, move_rng = rng.spawn(2)
    recorder = ChainRecorder(model.dim)
    calls_at_start = model.grad_calls
    eps = cfg.eps

    current = PhasePoint(theta0, np.zeros(model.dim))
    cache: Optional[PathCache] = None
    n_refresh = 0
    longest_cache = 0

    for n in range(cfg.iters):
        if cfg.max_grad_calls is not None:
            if model.grad_calls - calls_at_start >= cfg.max_grad_calls:
                logger.info("prhmc stopped after %d iterations: gradient budget spent", n)
                break

        L = math.ceil(sample_batch(dist, length_rng) / cfg.path_divisor)
        refresh = move_rng.uniform() < eta or cache is None

        if refresh:
            n_refresh += 1
            start = current.with_momentum(sample_momentum(mass, model.dim, move_rng))
            ensure_cached(model, start)
            h_start = hamiltonian(model, mass, start).total

            path, complete = _integrate(model, mass, start, eps, L)
            divergent = not complete
            accept_prob = 0.0
            if complete:
                proposal = path[-1]
                h_end = hamiltonian(model, mass, proposal).total
                divergent = is_divergent(h_start, h_end)
                accept_prob = acceptance_probability(h_start, h_end)
            accepted = bool(move_rng.uniform() < accept_prob)

            cache = PathCache([start] + path, cap=cfg.cache_cap)
            if accepted:
                cache.i = L + 1
                current = proposal
            else:
                cache.sigma = -1
                current = start.flipped()
        else:
            sigma = cache.sigma
            target = cache.i + sigma * L
            missing = target - len(cache) if sigma == 1 else 1 - target
            complete = True
            if missing > 0:
                complete = cache.extend(model, mass, eps, missing, forward=sigma == 1)
                logger.debug("Extended path cache by %d steps", missing)

            divergent = not complete
            accept_prob = 0.0
            if complete:
                j = cache.i + sigma * L
                stored = cache.at(j)
                proposal = PhasePoint(
                    stored.theta, sigma * stored.v, stored.potential, stored.grad
                )
                h_start = hamiltonian(model, mass, current).total
                h_end = hamiltonian(model, mass, proposal).total
                divergent = is_divergent(h_start, h_end)
                accept_prob = acceptance_probability(h_start, h_end)
            accepted = bool(move_rng.uniform() < accept_prob)

            if accepted:
                cache.i = j
                current = proposal
            else:
                cache.sigma = -sigma
                current = current.flipped()

        longest_cache = max(longest_cache, len(cache))
        recorder.record(current.theta, accept_prob, accepted, L, divergent)
        if on_iteration is not None:
            on_iteration(n, current, cache)

    result = recorder.result(
        SamplerKind.PRHMC.value,
        eps,
        model.grad_calls - calls_at_start,
        n_refresh=n_refresh,
        longest_cache=longest_cache,
    )
    if result.divergences:
        logger.warning(
            "prhmc: %d of %d iterations diverged", result.divergences, result.n_draws
        )
    return result
