from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import ConfigError
from ..core.target_model import TargetModel


@dataclass
class LogisticData:
    """Covariates X (N x p) and binary labels y (N)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        """Validates shapes and labels after initialization."""
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)

        if self.X.ndim != 2 or self.X.shape[0] == 0 or self.X.shape[1] == 0:
            raise ConfigError("Covariates must be a non-empty N x p matrix")
        if self.y.shape != (self.X.shape[0],):
            raise ConfigError(
                f"Expected {self.X.shape[0]} labels, got shape {self.y.shape}"
            )
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ConfigError("Labels must be 0 or 1")

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.X.shape[1]


def standardize_columns(X: np.ndarray) -> np.ndarray:
    """Centers each column and scales it to unit (population) variance."""
    X = np.asarray(X, dtype=float)
    std = X.std(axis=0)
    if np.any(std == 0):
        raise ConfigError(f"Constant covariate column(s): {np.flatnonzero(std == 0).tolist()}")
    return (X - X.mean(axis=0)) / std


def logistic_simulate(
    n_obs: int,
    n_covariates: int,
    rng: np.random.Generator,
    theta_true: Optional[np.ndarray] = None,
) -> LogisticData:
    """Generates standardized covariates and labels from a logistic model."""
    if n_obs < 2 or n_covariates < 1:
        raise ConfigError("Synthetic logistic data needs N >= 2 and p >= 1")
    X = standardize_columns(rng.standard_normal((n_obs, n_covariates)))
    if theta_true is None:
        theta_true = rng.normal(0.0, 0.5, size=n_covariates)
    y = (rng.uniform(size=n_obs) < expit(X @ theta_true)).astype(float)
    return LogisticData(X, y)


def logistic_potential_grad(
    data: LogisticData, theta: np.ndarray
) -> Tuple[float, np.ndarray]:
    """Negative log posterior of logistic regression under a flat prior.

    U = sum_i log(1 + exp(x_i theta)) - y_i x_i theta, evaluated in the form
    max(z, 0) - y z + log1p(exp(-|z|)) so that no term overflows.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.n_covariates,):
        raise ConfigError(
            f"Expected {data.n_covariates} coefficients, got shape {theta.shape}"
        )
    z = data.X @ theta
    y = data.y
    u = np.sum(np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z))))
    # sigma(z) - y without cancellation for y in {0, 1}
    resid = (1.0 - y) * expit(z) - y * expit(-z)
    return float(u), data.X.T @ resid


class LogisticModel(TargetModel):
    """Bayesian logistic regression posterior, flat prior."""

    name = "logistic"

    def __init__(self, data: LogisticData):
        self.data = data
        super().__init__(data.n_covariates)

    def _potential(self, theta):
        return logistic_potential_grad(self.data, theta)[0]

    def _potential_and_gradient(self, theta):
        return logistic_potential_grad(self.data, theta)

    def initial_point(self, rng):
        return rng.normal(0.0, 0.1, size=self.dim)
