from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError


class TargetModel(ABC):
    """Differentiable potential U(theta) = -log target density + const.

    Every call that evaluates the gradient increments ``grad_calls`` by exactly
    one. Instances are not shared between chains; use ``fresh()`` to obtain a
    copy with its own counter.
    """

    name: str = "target"

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ConfigError(f"Model dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.grad_calls = 0

    @abstractmethod
    def _potential(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    @abstractmethod
    def _potential_and_gradient(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        raise NotImplementedError

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ConfigError(
                f"{self.name}: expected a vector of length {self.dim}, "
                f"got shape {theta.shape}"
            )
        return theta

    def potential(self, theta) -> float:
        """Evaluates U(theta). Does not count as a gradient evaluation."""
        return float(self._potential(self._check(theta)))

    def potential_and_gradient(self, theta) -> Tuple[float, np.ndarray]:
        """Evaluates U(theta) and its gradient with a single counted call."""
        theta = self._check(theta)
        self.grad_calls += 1
        u, g = self._potential_and_gradient(theta)
        return float(u), g

    def fresh(self) -> "TargetModel":
        """Returns a shallow copy with a zeroed gradient counter."""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.grad_calls = 0
        return clone

    def parameter_groups(self) -> Dict[str, slice]:
        """Named coordinate blocks used for per-group efficiency summaries."""
        return {"theta": slice(0, self.dim)}

    def marginal_cdfs(self) -> Optional[List[Callable[[np.ndarray], np.ndarray]]]:
        """Analytic marginal CDFs per component, when the target has them."""
        return None

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        """A starting position; small random jitter around the origin."""
        return rng.uniform(-2.0, 2.0, size=self.dim)
