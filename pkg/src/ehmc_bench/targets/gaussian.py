from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import linalg, stats

from ..core.errors import ConfigError
from ..core.target_model import TargetModel


@dataclass
class MvnSpec:
    """Zero-mean normal target with covariance A_ij = rho^|i-j|.

    The Cholesky factor of A is computed once at construction; gradients are
    obtained by triangular solves, never through an explicit inverse.
    """

    d: int
    rho: float = 0.0
    cov: np.ndarray = field(init=False, repr=False)
    chol: Tuple[np.ndarray, bool] = field(init=False, repr=False)

    def __post_init__(self):
        """Validates the parameters and factorizes the covariance."""
        if self.d < 1:
            raise ConfigError(f"MVN dimension must be positive, got {self.d}")
        if not abs(self.rho) < 1:
            raise ConfigError(f"MVN correlation base must satisfy |rho| < 1, got {self.rho}")

        idx = np.arange(self.d)
        self.cov = np.power(float(self.rho), np.abs(idx[:, None] - idx[None, :]))
        try:
            self.chol = linalg.cho_factor(self.cov, lower=True)
        except linalg.LinAlgError as e:
            raise ConfigError(f"MVN covariance is not positive definite: {e}") from e


def mvn_potential_grad(spec: MvnSpec, theta: np.ndarray) -> Tuple[float, np.ndarray]:
    """U = theta^T A^-1 theta / 2 and its gradient A^-1 theta."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.d,):
        raise ConfigError(f"Expected a vector of length {spec.d}, got shape {theta.shape}")
    grad = linalg.cho_solve(spec.chol, theta)
    return 0.5 * float(np.dot(theta, grad)), grad


class MvnModel(TargetModel):
    """Correlated multivariate normal benchmark target."""

    name = "mvn"

    def __init__(self, d: int, rho: float = 0.0):
        self.spec = MvnSpec(d, rho)
        super().__init__(d)

    def _potential(self, theta):
        return mvn_potential_grad(self.spec, theta)[0]

    def _potential_and_gradient(self, theta):
        return mvn_potential_grad(self.spec, theta)

    def marginal_cdfs(self):
        scales = np.sqrt(np.diag(self.spec.cov))
        return [stats.norm(loc=0.0, scale=s).cdf for s in scales]

    def initial_point(self, rng):
        # exact draw from the target, so chains start in stationarity
        return np.linalg.cholesky(self.spec.cov) @ rng.standard_normal(self.dim)


class FlatModel(TargetModel):
    """Constant potential (improper uniform target); a free particle."""

    name = "flat"

    def _potential(self, theta):
        return 0.0

    def _potential_and_gradient(self, theta):
        return 0.0, np.zeros(self.dim)

    def initial_point(self, rng):
        return np.zeros(self.dim)
