import math
from typing import Iterator, List

import numpy as np

from .errors import ConfigError, DivergenceError, DivergentValueError
from .phase_space import HamiltonianValue, MassSpec, PhasePoint
from .target_model import TargetModel

# |H(end) - H(start)| above this aborts a trajectory as divergent
DIVERGENCE_THRESHOLD = 1000.0


def _evaluate(model: TargetModel, theta: np.ndarray, step: int):
    try:
        u, g = model.potential_and_gradient(theta)
    except DivergentValueError as e:
        raise DivergenceError(f"{e} at leapfrog step {step}", step) from e
    if not (math.isfinite(u) and np.all(np.isfinite(g))):
        raise DivergenceError(f"Potential or gradient diverged at leapfrog step {step}", step)
    return u, g


def ensure_cached(model: TargetModel, p: PhasePoint) -> PhasePoint:
    """Fills in U(theta) and its gradient on p if they are not cached yet.

    Args:
        model: Target providing the potential
        p: Phase point, updated in place

    Returns:
        The same phase point

    Raises:
        DivergenceError: If the potential or gradient at p is not finite
    """
    if p.grad is None:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            p.potential, p.grad = _evaluate(model, p.theta, 0)
    return p


def hamiltonian(model: TargetModel, mass: MassSpec, p: PhasePoint) -> HamiltonianValue:
    """Evaluates H(theta, v) = U(theta) + 1/2 v^T M^-1 v.

    Args:
        model: Target providing U
        mass: Momentum covariance
        p: Phase point to evaluate

    Returns:
        HamiltonianValue with potential, kinetic and total energy

    Raises:
        DivergentValueError: If U or any momentum entry is not finite
    """
    mass.check_dim(p.dim)
    if p.potential is not None:
        u = p.potential
    else:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            u = model.potential(p.theta)

    if not math.isfinite(u) or not np.all(np.isfinite(p.v)):
        raise DivergentValueError("Hamiltonian evaluated at a non-finite state")

    return HamiltonianValue(potential_energy=u, kinetic_energy=mass.kinetic_energy(p.v))


def sample_momentum(mass: MassSpec, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draws v ~ N(0, M) with independent components."""
    if d < 1:
        raise ConfigError(f"Momentum dimension must be positive, got {d}")
    mass.check_dim(d)
    return rng.standard_normal(d) * mass.std(d)


def leapfrog_iter(
    model: TargetModel, mass: MassSpec, p: PhasePoint, eps: float, L: int
) -> Iterator[PhasePoint]:
    """Yields the L phase points of the leapfrog path lazily.

    Each new position costs one gradient call whose result serves both
    adjacent half steps. Stopping the iteration early stops the integration.
    """
    p = ensure_cached(model, p)
    theta = p.theta
    half = 0.5 * eps

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        v_star = p.v - half * p.grad
        for step in range(1, L + 1):
            theta = theta + eps * mass.inverse_apply(v_star)
            if not np.all(np.isfinite(theta)):
                raise DivergenceError(f"Position diverged at leapfrog step {step}", step)

            u, g = _evaluate(model, theta, step)
            v = v_star - half * g
            if not np.all(np.isfinite(v)):
                raise DivergenceError(f"Momentum diverged at leapfrog step {step}", step)

            yield PhasePoint(theta, v, u, g)
            v_star = v - half * g


def leapfrog(
    model: TargetModel, mass: MassSpec, p: PhasePoint, eps: float, L: int
) -> PhasePoint:
    """Runs L leapfrog steps of size eps from p.

    A point without a cached gradient costs L + 1 gradient evaluations; a point
    whose gradient is cached (e.g. the end of a previous trajectory) costs L.

    Args:
        model: Target providing U and its gradient
        mass: Momentum covariance
        p: Starting phase point
        eps: Step size, strictly positive
        L: Number of steps, L >= 0

    Returns:
        Phase point after L steps (p itself when L == 0)

    Raises:
        ConfigError: If eps <= 0 or L < 0
        DivergenceError: If the state becomes non-finite, with the step index
    """
    if not eps > 0:
        raise ConfigError(f"Step size must be positive, got {eps}")
    if L < 0:
        raise ConfigError(f"Number of leapfrog steps must be >= 0, got {L}")
    if L == 0:
        return p

    end = p
    for end in leapfrog_iter(model, mass, p, eps, L):
        pass
    return end


def leapfrog_path(
    model: TargetModel, mass: MassSpec, p: PhasePoint, eps: float, L: int
) -> List[PhasePoint]:
    """Returns the L phase points visited by leapfrog from p, in order.

    Element k (0-based) is bitwise identical to ``leapfrog(model, mass, p, eps, k + 1)``.

    Raises:
        DivergenceError: With ``path`` holding the finite points before the divergence
    """
    if not eps > 0:
        raise ConfigError(f"Step size must be positive, got {eps}")
    if L < 1:
        raise ConfigError(f"Path length must be >= 1, got {L}")
    points = []
    try:
        for q in leapfrog_iter(model, mass, p, eps, L):
            points.append(q)
    except DivergenceError as e:
        e.path = points
        raise
    return points


def acceptance_probability(h_start: float, h_end: float) -> float:
    """Returns 1 ^ exp(h_start - h_end); 0 for divergent energy changes."""
    delta = h_end - h_start
    if not math.isfinite(delta) or abs(delta) > DIVERGENCE_THRESHOLD:
        return 0.0
    if delta <= 0:
        return 1.0
    return math.exp(-delta)


def is_divergent(h_start: float, h_end: float) -> bool:
    delta = h_end - h_start
    return not math.isfinite(delta) or abs(delta) > DIVERGENCE_THRESHOLD
