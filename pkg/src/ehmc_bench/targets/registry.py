import inspect
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np

from ..core.errors import ConfigError
from ..core.target_model import TargetModel
from .gaussian import FlatModel, MvnModel
from .irt import IrtModel, irt_simulate
from .logistic import LogisticModel, logistic_simulate
from .volatility import StochasticVolatilityModel, sv_simulate

# Synthetic stochastic volatility parameters (phi0, kappa0, sigma0)
SV_TRUE_PARAMS = (0.98, 0.65, 0.15)


def _mvn(data_path, rng, d: int = 20, rho: float = 0.99):
    return MvnModel(int(d), float(rho))


def _gaussian1d(data_path, rng):
    return MvnModel(1, 0.0)


def _flat(data_path, rng, d: int = 1):
    return FlatModel(int(d))


def _logistic(data_path, rng, n_obs: int = 200, n_covariates: int = 5):
    from ..persistence import load_logistic_csv

    if data_path is not None:
        return LogisticModel(load_logistic_csv(data_path))
    return LogisticModel(logistic_simulate(int(n_obs), int(n_covariates), rng))


def _sv(data_path, rng, T: int = 100):
    from ..persistence import load_sv_csv

    if data_path is not None:
        return StochasticVolatilityModel(load_sv_csv(data_path))
    return StochasticVolatilityModel(sv_simulate(int(T), *SV_TRUE_PARAMS, rng))


def _irt(data_path, rng, n_items: int = 20, n_persons: int = 100):
    from ..persistence import load_irt_csv

    if data_path is not None:
        return IrtModel(load_irt_csv(data_path))
    return IrtModel(irt_simulate(int(n_items), int(n_persons), rng))


MODEL_BUILDERS: Dict[str, Callable[..., TargetModel]] = {
    "mvn": _mvn,
    "gaussian1d": _gaussian1d,
    "flat": _flat,
    "logistic": _logistic,
    "sv": _sv,
    "irt": _irt,
}


def get_model(
    name: str,
    data_path: Optional[Path] = None,
    rng: Optional[np.random.Generator] = None,
    **params,
) -> TargetModel:
    """Builds a benchmark model by id.

    Args:
        name: One of 'mvn', 'gaussian1d', 'flat', 'logistic', 'sv', 'irt'
        data_path: Optional CSV file with the model's data
        rng: Generator for synthetic data when no file is given
        **params: Model parameters (d, rho, T, n_obs, n_items, ...)

    Returns:
        A fresh TargetModel with a zeroed gradient counter

    Raises:
        ConfigError: If the model id or one of the parameters is unknown
    """
    try:
        builder = MODEL_BUILDERS[name.lower()]
    except KeyError:
        raise ConfigError(
            f"Unknown model: {name}. Must be one of {', '.join(MODEL_BUILDERS)}"
        )
    accepted = list(inspect.signature(builder).parameters)[2:]
    unknown = sorted(set(params) - set(accepted))
    if unknown:
        allowed = ", ".join(accepted) or "none"
        raise ConfigError(
            f"Unknown parameter for model {name}: {', '.join(unknown)}. Accepted: {allowed}"
        )
    if rng is None:
        rng = np.random.default_rng(0)
    return builder(data_path, rng, **params)
