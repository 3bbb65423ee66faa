import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from ..core.errors import (
    AdaptationError,
    ConfigError,
    DivergenceError,
    ModelError,
    SamplerWarning,
)
from ..core.hamiltonian import (
    acceptance_probability,
    ensure_cached,
    hamiltonian,
    leapfrog,
    sample_momentum,
)
from ..core.phase_space import MassSpec, PhasePoint
from ..core.target_model import TargetModel
from ..samplers.base import ChainState, hmc_step

logger = logging.getLogger(__name__)

MAX_INIT_DOUBLINGS = 100
MIN_INIT_EPSILON = 2.0**-50
MASS_RETUNE_FRACTION = 0.2


@dataclass(frozen=True)
class DualAveragingConfig:
    """Target acceptance and the constants of the dual averaging scheme."""

    p0: float = 0.8
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75

    def __post_init__(self):
        """Validates the configuration after initialization."""
        if not 0 < self.p0 < 1:
            raise ConfigError(f"Target acceptance must lie in (0, 1), got {self.p0}")
        if self.gamma <= 0 or self.t0 <= 0:
            raise ConfigError("gamma and t0 must be positive")
        if not 0.5 < self.kappa <= 1:
            raise ConfigError(f"kappa must lie in (0.5, 1], got {self.kappa}")


@dataclass(frozen=True)
class DualAveragingState:
    log_eps: float
    log_eps_avg: float
    h_bar: float
    mu: float
    t: int
    gamma: float
    t0: float
    kappa: float
    p0: float

    def __post_init__(self):
        """Validates the state after initialization."""
        if self.t < 0:
            raise ConfigError(f"Iteration counter must be >= 0, got {self.t}")
        if not 0 < self.p0 < 1:
            raise ConfigError(f"Target acceptance must lie in (0, 1), got {self.p0}")
        if self.gamma <= 0 or self.t0 <= 0:
            raise ConfigError("gamma and t0 must be positive")
        if not 0.5 < self.kappa <= 1:
            raise ConfigError(f"kappa must lie in (0.5, 1], got {self.kappa}")

    @classmethod
    def start(cls, eps_init: float, config: DualAveragingConfig) -> "DualAveragingState":
        """Fresh state shrinking toward log(10 eps_init)."""
        if not eps_init > 0:
            raise ConfigError(f"Initial step size must be positive, got {eps_init}")
        return cls(
            log_eps=math.log(eps_init),
            log_eps_avg=0.0,
            h_bar=0.0,
            mu=math.log(10.0 * eps_init),
            t=0,
            gamma=config.gamma,
            t0=config.t0,
            kappa=config.kappa,
            p0=config.p0,
        )

    @property
    def eps(self) -> float:
        """Step size used for the next warmup iteration."""
        return math.exp(self.log_eps)

    @property
    def final_eps(self) -> float:
        """Averaged step size, frozen once warmup ends."""
        return math.exp(self.log_eps_avg)


def da_update(state: DualAveragingState, alpha: float) -> DualAveragingState:
    """Feeds one acceptance statistic into the dual averaging recursion."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"Acceptance statistic must lie in [0, 1], got {alpha}")

    t = state.t + 1
    w = 1.0 / (t + state.t0)
    h_bar = (1.0 - w) * state.h_bar + w * (state.p0 - alpha)
    log_eps = state.mu - math.sqrt(t) / state.gamma * h_bar
    eta = t ** (-state.kappa)
    log_eps_avg = eta * log_eps + (1.0 - eta) * state.log_eps_avg
    return replace(state, t=t, h_bar=h_bar, log_eps=log_eps, log_eps_avg=log_eps_avg)


def _one_step_ratio(model, mass, start: PhasePoint, h_start: float, eps: float) -> float:
    try:
        end = leapfrog(model, mass, start, eps, 1)
        return acceptance_probability(h_start, hamiltonian(model, mass, end).total)
    except DivergenceError:
        return 0.0


def init_epsilon(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    rng: np.random.Generator,
    v: Optional[np.ndarray] = None,
) -> float:
    """Finds a reasonable first step size by doubling or halving from 1.

    A single leapfrog step from (theta0, v) is taken at each candidate; the
    search stops at the first step size whose Metropolis ratio lies on the
    other side of 1/2 from the ratio at eps = 1.

    Args:
        model: Target providing U and its gradient
        mass: Momentum covariance
        theta0: Starting position
        rng: Random generator for the momentum draw
        v: Momentum to use instead of a fresh draw

    Returns:
        Initial step size

    Raises:
        ModelError: If U is not finite at theta0 or the step diverges even at
            tiny step sizes
    """
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (model.dim,) or not np.all(np.isfinite(theta0)):
        raise ConfigError(f"Starting point must be a finite vector of length {model.dim}")
    if v is None:
        v = sample_momentum(mass, model.dim, rng)

    start = PhasePoint(theta0, np.asarray(v, dtype=float))
    try:
        ensure_cached(model, start)
    except DivergenceError as e:
        raise ModelError(f"{model.name}: potential is not finite at the starting point") from e
    h_start = hamiltonian(model, mass, start).total

    eps = 1.0
    ratio = _one_step_ratio(model, mass, start, h_start, eps)
    direction = 1 if ratio > 0.5 else -1

    for _ in range(MAX_INIT_DOUBLINGS):
        if (ratio > 0.5) != (direction == 1):
            return eps
        eps *= 2.0**direction
        if eps <= MIN_INIT_EPSILON:
            raise ModelError(
                f"{model.name}: leapfrog diverges even at step size {eps:.3g}"
            )
        ratio = _one_step_ratio(model, mass, start, h_start, eps)

    if (ratio > 0.5) != (direction == 1):
        return eps
    message = (
        f"Initial step size search stopped after {MAX_INIT_DOUBLINGS} doublings "
        f"at eps = {eps:.3g}"
    )
    logger.warning(message)
    warnings.warn(message, SamplerWarning, stacklevel=2)
    return eps


class TuningResult(NamedTuple):
    """Outcome of warmup."""

    eps: float
    theta: np.ndarray
    mass: MassSpec
    mean_accept: float


def _dual_averaging_run(model, mass, state, eps_init, config, n_iters, L, rng):
    da = DualAveragingState.start(eps_init, config)
    accept_probs = np.empty(n_iters)
    positions = np.empty((n_iters, model.dim))
    divergent = 0
    for n in range(n_iters):
        step = hmc_step(state, model, mass, da.eps, L, rng)
        state = step.state
        divergent += step.divergent
        accept_probs[n] = step.accept_prob
        positions[n] = state.theta
        da = da_update(da, step.accept_prob)

    if divergent == n_iters:
        raise AdaptationError(
            f"{model.name}: all {n_iters} warmup iterations diverged"
        )
    if divergent:
        logger.debug("%d of %d warmup iterations diverged", divergent, n_iters)
    return da.final_eps, state, positions, float(np.mean(accept_probs))


def _diagonal_mass(positions: np.ndarray) -> MassSpec:
    """Diagonal mass from the warmup positions.

    The stored diagonal is the momentum covariance M, so it is set to the
    inverse of the estimated posterior variances: M^-1 then equals the
    variances, and the position update eps M^-1 v moves each coordinate on
    the scale of its own spread. Setting M_ii to the variances themselves
    would shrink the steps of the widest coordinates instead.
    """
    # variances shrunk toward 1e-3 for short runs
    n = positions.shape[0]
    var = np.var(positions, axis=0, ddof=1)
    var = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
    return MassSpec.diagonal(1.0 / var)


def tune_step_size(
    model: TargetModel,
    mass: MassSpec,
    theta0,
    p0: float,
    warmup_iters: int,
    L_warmup: int,
    rng: np.random.Generator,
    adapt_mass: bool = False,
    config: Optional[DualAveragingConfig] = None,
) -> TuningResult:
    """Tunes eps by dual averaging on a fixed-length HMC chain.

    Each iteration feeds its Metropolis ratio (clipped at 1) into the
    averaging recursion; the averaged step size is returned. With
    ``adapt_mass`` the mass diagonal is set from the second half of the
    warmup draws and eps is re-tuned for another fifth of the iterations.

    Args:
        model: Target providing U and its gradient
        mass: Initial momentum covariance
        theta0: Starting position
        p0: Target acceptance probability in (0, 1)
        warmup_iters: Number of warmup iterations, >= 1
        L_warmup: Trajectory length used during warmup
        rng: Random generator
        adapt_mass: Whether to estimate a diagonal mass matrix
        config: Dual averaging constants; p0 overrides its target

    Returns:
        TuningResult(eps, theta, mass, mean_accept)

    Raises:
        ConfigError: If warmup_iters < 1 or L_warmup < 1
        AdaptationError: If every warmup iteration diverged
    """
    if warmup_iters < 1:
        raise ConfigError(f"warmup_iters must be >= 1, got {warmup_iters}")
    if L_warmup < 1:
        raise ConfigError(f"L_warmup must be >= 1, got {L_warmup}")
    if adapt_mass and warmup_iters < 4:
        raise ConfigError("Mass adaptation needs at least 4 warmup iterations")
    config = replace(config or DualAveragingConfig(), p0=p0)

    state = ChainState.start(theta0, model)
    eps_init = init_epsilon(model, mass, state.theta, rng)
    eps, state, positions, mean_accept = _dual_averaging_run(
        model, mass, state, eps_init, config, warmup_iters, L_warmup, rng
    )

    if adapt_mass:
        mass = _diagonal_mass(positions[warmup_iters // 2 :])
        # the cached gradient stays valid; only the kinetic energy changes
        retune_iters = max(1, math.ceil(MASS_RETUNE_FRACTION * warmup_iters))
        eps, state, _, mean_accept = _dual_averaging_run(
            model, mass, state, eps, config, retune_iters, L_warmup, rng
        )
        logger.info("Adapted diagonal mass matrix, re-tuned for %d iterations", retune_iters)

    logger.info(
        "Tuned step size %.4g for p0 = %.2f (mean acceptance %.3f)", eps, p0, mean_accept
    )
    return TuningResult(eps, state.theta.copy(), mass, mean_accept)
