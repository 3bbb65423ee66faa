from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import ConfigError, DivergentValueError
from ..core.target_model import TargetModel

HALF_CAUCHY_SCALE = 2.0
MU_B_PRIOR_VAR = 25.0


@dataclass
class IrtData:
    """Binary responses y[i, j] of person j to item i (I items, J persons).

    Unconstrained parameter layout:
    (log a_1..I, log b_1..I, eta_1..J, log sigma_eta, log sigma_a, mu_b, log sigma_b).
    """

    y: np.ndarray

    def __post_init__(self):
        """Validates the response matrix after initialization."""
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 2 or self.y.shape[0] == 0 or self.y.shape[1] == 0:
            raise ConfigError("IRT responses must be a non-empty I x J matrix")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ConfigError("IRT responses must be 0 or 1")

    @property
    def n_items(self) -> int:
        return self.y.shape[0]

    @property
    def n_persons(self) -> int:
        return self.y.shape[1]

    @property
    def dim(self) -> int:
        return 2 * self.n_items + self.n_persons + 4


def irt_simulate(n_items: int, n_persons: int, rng: np.random.Generator) -> IrtData:
    """Draws a synthetic response matrix from the hierarchical 2PL model."""
    if n_items < 1 or n_persons < 1:
        raise ConfigError("IRT simulation needs at least one item and one person")
    a = rng.lognormal(0.0, 0.5, size=n_items)
    b = rng.lognormal(0.0, 0.5, size=n_items)
    eta = rng.normal(0.0, 1.0, size=n_persons)
    p = expit(a[:, None] * (eta[None, :] - b[:, None]))
    return IrtData((rng.uniform(size=p.shape) < p).astype(float))


def _log_half_cauchy_term(tau: float) -> Tuple[float, float]:
    # -log half-Cauchy(sigma; 0, 2) - log sigma at sigma = e^tau, up to a constant
    r = np.exp(2.0 * tau) / HALF_CAUCHY_SCALE**2
    return float(np.log1p(r) - tau), float(2.0 * r / (1.0 + r) - 1.0)


def irt_potential_grad(data: IrtData, params) -> Tuple[float, np.ndarray]:
    """Negative log posterior of the hierarchical IRT model, unconstrained scale.

    Includes the log-Jacobian of every log-transformed coordinate.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (data.dim,):
        raise ConfigError(f"Expected {data.dim} parameters, got shape {params.shape}")

    I, J = data.n_items, data.n_persons
    log_a = params[:I]
    log_b = params[I : 2 * I]
    eta = params[2 * I : 2 * I + J]
    tau_eta, tau_a, mu_b, tau_b = params[2 * I + J :]

    with np.errstate(over="ignore", invalid="ignore"):
        a = np.exp(log_a)
        b = np.exp(log_b)
        z = a[:, None] * (eta[None, :] - b[:, None])
        y = data.y

        # -log likelihood and d(-loglik)/dz
        u = np.sum(np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z))))
        dz = (1.0 - y) * expit(z) - y * expit(-z)

        var_eta = np.exp(2.0 * tau_eta)
        var_a = np.exp(2.0 * tau_a)
        var_b = np.exp(2.0 * tau_b)
        dev_b = log_b - mu_b

        # eta ~ N(0, s_eta^2); log a ~ N(0, s_a^2); log b ~ N(mu_b, s_b^2)
        u += J * tau_eta + 0.5 * np.sum(eta**2) / var_eta
        u += I * tau_a + 0.5 * np.sum(log_a**2) / var_a
        u += I * tau_b + 0.5 * np.sum(dev_b**2) / var_b
        u += 0.5 * mu_b**2 / MU_B_PRIOR_VAR

        grad = np.empty(data.dim)
        grad[:I] = np.sum(dz * z, axis=1) + log_a / var_a
        grad[I : 2 * I] = -np.sum(dz, axis=1) * a * b + dev_b / var_b
        grad[2 * I : 2 * I + J] = a @ dz + eta / var_eta

        g_hyper = np.array(
            [
                J - np.sum(eta**2) / var_eta,
                I - np.sum(log_a**2) / var_a,
                mu_b / MU_B_PRIOR_VAR - np.sum(dev_b) / var_b,
                I - np.sum(dev_b**2) / var_b,
            ]
        )
        for k, tau in ((0, tau_eta), (1, tau_a), (3, tau_b)):
            term, dterm = _log_half_cauchy_term(tau)
            u += term
            g_hyper[k] += dterm
        grad[2 * I + J :] = g_hyper

    if not (np.isfinite(u) and np.all(np.isfinite(grad))):
        raise DivergentValueError("IRT potential is not finite")
    return float(u), grad


class IrtModel(TargetModel):
    """Hierarchical two-parameter logistic item response model."""

    name = "irt"

    def __init__(self, data: IrtData):
        self.data = data
        super().__init__(data.dim)

    def _potential(self, theta):
        return irt_potential_grad(self.data, theta)[0]

    def _potential_and_gradient(self, theta):
        return irt_potential_grad(self.data, theta)

    def parameter_groups(self):
        I, J = self.data.n_items, self.data.n_persons
        return {
            "a": slice(0, I),
            "b": slice(I, 2 * I),
            "eta": slice(2 * I, 2 * I + J),
            "hyper": slice(2 * I + J, self.dim),
        }

    def initial_point(self, rng):
        return rng.normal(0.0, 0.1, size=self.dim)
