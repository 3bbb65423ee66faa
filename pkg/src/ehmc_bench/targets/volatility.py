import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit

from ..core.errors import ConfigError, DivergentValueError
from ..core.target_model import TargetModel

logger = logging.getLogger(__name__)

# Prior constants of the stochastic volatility model
BETA_A, BETA_B = 20.0, 1.5  # 0.5 (1 + phi) ~ Beta(20, 1.5)
SIGMA_DF, SIGMA_SCALE2 = 10.0, 0.05  # sigma^2 ~ scaled-inv-chi2(10, 0.05)


@dataclass
class SvData:
    """Observed series y_1..y_T of the stochastic volatility model.

    The parameter vector is (alpha, beta, gamma, x_1..x_T) with
    alpha = log((1 + phi) / (1 - phi)), beta = log(kappa), gamma = log(sigma^2).
    """

    y: np.ndarray

    def __post_init__(self):
        """Validates the series after initialization."""
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 1 or self.y.size < 1:
            raise ConfigError("Stochastic volatility series must be a non-empty vector")
        if not np.all(np.isfinite(self.y)):
            raise ConfigError("Stochastic volatility series contains non-finite values")

    @property
    def T(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.T + 3


def sv_simulate(
    T: int, phi0: float, kappa0: float, sigma0: float, rng: np.random.Generator
) -> SvData:
    """Simulates y_t = eps_t kappa exp(x_t / 2) with AR(1) log-volatility x_t.

    Args:
        T: Series length
        phi0: Persistence, |phi0| < 1
        kappa0: Scale, > 0
        sigma0: Volatility of the log-volatility, > 0
        rng: Random generator

    Returns:
        SvData holding the T observations
    """
    if T < 1:
        raise ConfigError(f"Series length must be positive, got {T}")
    if not abs(phi0) < 1:
        raise ConfigError(f"Persistence must satisfy |phi| < 1, got {phi0}")
    if kappa0 <= 0 or sigma0 <= 0:
        raise ConfigError("kappa0 and sigma0 must be positive")

    x = np.empty(T)
    x[0] = rng.normal(0.0, sigma0 / np.sqrt(1.0 - phi0**2))
    shocks = rng.normal(0.0, sigma0, size=T)
    for t in range(1, T):
        x[t] = phi0 * x[t - 1] + shocks[t]
    y = rng.standard_normal(T) * kappa0 * np.exp(0.5 * x)
    return SvData(y)


def _split(data: SvData, params) -> Tuple[float, float, float, np.ndarray]:
    params = np.asarray(params, dtype=float)
    if params.shape != (data.dim,):
        raise ConfigError(f"Expected {data.dim} parameters, got shape {params.shape}")
    return params[0], params[1], params[2], params[3:]


def sv_potential_grad(data: SvData, params) -> Tuple[float, np.ndarray]:
    """Potential of the stochastic volatility posterior and its gradient.

    U = T beta + sum x_t / 2 + sum y_t^2 / (2 e^{2 beta} e^{x_t})
        - 20.5 alpha + 22.5 log(e^alpha + 1) + (T / 2 + 5) gamma
        + 2 x_1^2 e^alpha / ((e^alpha + 1)^2 e^gamma)
        + 1/2 sum_{t >= 2} e^{-gamma} (x_t - phi x_{t-1})^2 + 1 / (4 e^gamma)
    with phi = (e^alpha - 1) / (e^alpha + 1).
    """
    alpha, beta, gamma, x = _split(data, params)
    T = data.T
    y2 = data.y**2

    with np.errstate(over="ignore", invalid="ignore"):
        s = expit(alpha)  # e^a / (e^a + 1)
        s1 = s * (1.0 - s)  # e^a / (e^a + 1)^2
        phi = 2.0 * s - 1.0
        inv_sig2 = np.exp(-gamma)
        obs = y2 * np.exp(-2.0 * beta - x)
        resid = x[1:] - phi * x[:-1]

        u = (
            T * beta
            + 0.5 * np.sum(x)
            + 0.5 * np.sum(obs)
            - 20.5 * alpha
            + 22.5 * np.logaddexp(0.0, alpha)
            + (0.5 * T + 5.0) * gamma
            + 2.0 * x[0] ** 2 * s1 * inv_sig2
            + 0.5 * inv_sig2 * np.sum(resid**2)
            + 0.25 * inv_sig2
        )

        grad = np.empty(data.dim)
        grad[0] = (
            -20.5
            + 22.5 * s
            + 2.0 * x[0] ** 2 * inv_sig2 * s1 * (1.0 - 2.0 * s)
            - inv_sig2 * np.sum(resid * x[:-1]) * 2.0 * s1
        )
        grad[1] = T - np.sum(obs)
        grad[2] = (
            0.5 * T
            + 5.0
            - 2.0 * x[0] ** 2 * s1 * inv_sig2
            - 0.5 * inv_sig2 * np.sum(resid**2)
            - 0.25 * inv_sig2
        )

        gx = 0.5 - 0.5 * obs
        gx[0] += 4.0 * x[0] * s1 * inv_sig2
        gx[1:] += inv_sig2 * resid
        gx[:-1] -= inv_sig2 * phi * resid
        grad[3:] = gx

    if not (np.isfinite(u) and np.all(np.isfinite(grad))):
        raise DivergentValueError("Stochastic volatility potential is not finite")
    return float(u), grad


def sv_potential_derived(data: SvData, params) -> float:
    """The same posterior re-derived from its priors with scipy densities.

    Agrees with ``sv_potential_grad`` up to an additive constant.
    """
    alpha, beta, gamma, x = _split(data, params)
    s = expit(alpha)
    phi = 2.0 * s - 1.0
    sigma2 = np.exp(gamma)
    kappa = np.exp(beta)

    log_density = (
        stats.beta.logpdf(s, BETA_A, BETA_B)
        + log_expit(alpha)
        + log_expit(-alpha)  # |ds / dalpha|
        + stats.invgamma.logpdf(
            sigma2, SIGMA_DF / 2.0, scale=SIGMA_DF * SIGMA_SCALE2 / 2.0
        )
        + gamma  # |d sigma^2 / d gamma|
        # p(kappa) ~ 1 / kappa cancels the Jacobian of beta = log kappa
        + stats.norm.logpdf(x[0], 0.0, np.sqrt(sigma2 / (1.0 - phi**2)))
        + np.sum(stats.norm.logpdf(x[1:], phi * x[:-1], np.sqrt(sigma2)))
        + np.sum(stats.norm.logpdf(data.y, 0.0, kappa * np.exp(0.5 * x)))
    )
    return -float(log_density)


def sv_cross_check(
    data: SvData, rng: np.random.Generator, n_points: int = 20, tol: float = 1e-6
) -> float:
    """Compares the printed potential with the re-derived one at random points.

    The two must differ by a constant. Discrepancies are logged, not raised.

    Returns:
        Largest deviation of U_printed - U_derived from its median
    """
    diffs = []
    for _ in range(n_points):
        params = np.concatenate(
            [
                [rng.uniform(0.5, 5.0), rng.normal(0.0, 0.5), rng.uniform(-5.0, 0.0)],
                rng.normal(0.0, 1.0, size=data.T),
            ]
        )
        diffs.append(sv_potential_grad(data, params)[0] - sv_potential_derived(data, params))

    diffs = np.asarray(diffs)
    deviation = float(np.max(np.abs(diffs - np.median(diffs))))
    if deviation > tol * max(1.0, float(np.max(np.abs(diffs)))):
        logger.warning(
            "Stochastic volatility potential disagrees with its re-derivation "
            "by up to %.3g beyond a constant",
            deviation,
        )
    return deviation


class StochasticVolatilityModel(TargetModel):
    """Posterior of the stochastic volatility model in (alpha, beta, gamma, x)."""

    name = "sv"

    def __init__(self, data: SvData):
        self.data = data
        super().__init__(data.dim)

    def _potential(self, theta):
        return sv_potential_grad(self.data, theta)[0]

    def _potential_and_gradient(self, theta):
        return sv_potential_grad(self.data, theta)

    def parameter_groups(self):
        return {"params": slice(0, 3), "x": slice(3, self.dim)}

    def initial_point(self, rng):
        # phi = 0.9, kappa from the sample scale, sigma = 0.3, flat volatility
        head = [np.log(1.9 / 0.1), np.log(np.std(self.data.y) + 1e-12), np.log(0.09)]
        return np.concatenate([head, rng.normal(0.0, 0.1, size=self.data.T)])
