from .gaussian import FlatModel, MvnModel, MvnSpec, mvn_potential_grad
from .logistic import (
    LogisticData,
    LogisticModel,
    logistic_potential_grad,
    logistic_simulate,
    standardize_columns,
)
from .volatility import (
    StochasticVolatilityModel,
    SvData,
    sv_cross_check,
    sv_potential_derived,
    sv_potential_grad,
    sv_simulate,
)
from .irt import IrtData, IrtModel, irt_potential_grad, irt_simulate
from .registry import MODEL_BUILDERS, get_model

__all__ = [
    "FlatModel",
    "MvnModel",
    "MvnSpec",
    "mvn_potential_grad",
    "LogisticData",
    "LogisticModel",
    "logistic_potential_grad",
    "logistic_simulate",
    "standardize_columns",
    "StochasticVolatilityModel",
    "SvData",
    "sv_cross_check",
    "sv_potential_derived",
    "sv_potential_grad",
    "sv_simulate",
    "IrtData",
    "IrtModel",
    "irt_potential_grad",
    "irt_simulate",
    "MODEL_BUILDERS",
    "get_model",
]
