import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft, stats

from ..core.errors import ConfigError, UndefinedESSError

# Avoid circular imports
if TYPE_CHECKING:
    from ..core.target_model import TargetModel
    from ..samplers.base import SamplerResult

logger = logging.getLogger(__name__)

MIN_ESS_LENGTH = 10

Reference = Union[Callable[[np.ndarray], np.ndarray], Sequence[float], np.ndarray]


def _as_chain(chain) -> np.ndarray:
    chain = np.asarray(chain, dtype=float)
    if chain.ndim == 1:
        chain = chain[:, None]
    if chain.ndim != 2:
        raise ConfigError(f"Chain must be an N x d matrix, got shape {chain.shape}")
    return chain


def autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance estimate at all lags, computed by FFT."""
    n = x.size
    centered = x - x.mean()
    size = fft.next_fast_len(2 * n)
    freq = fft.rfft(centered, n=size)
    return fft.irfft(freq * np.conjugate(freq), n=size)[:n] / n


def ess(x) -> float:
    """Effective sample size N / (1 + 2 sum_k rho_k) of a single sequence.

    The autocorrelation sum is truncated by Geyer's initial positive sequence
    and made monotone; the result is clamped to (0, N].

    Args:
        x: Sequence of at least 10 finite values

    Returns:
        Effective sample size

    Raises:
        ConfigError: If x is too short or not finite
        UndefinedESSError: If x is constant
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < MIN_ESS_LENGTH:
        raise ConfigError(f"ESS needs at least {MIN_ESS_LENGTH} draws, got {n}")
    if not np.all(np.isfinite(x)):
        raise ConfigError("ESS input contains non-finite values")
    if np.ptp(x) == 0:
        raise UndefinedESSError("ESS is undefined for a constant sequence")

    acov = autocovariance(x)
    rho = acov / acov[0]

    # Geyer: sums of adjacent pairs, cut at the first non-positive pair
    n_pairs = n // 2
    pairs = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    non_positive = np.flatnonzero(pairs <= 0)
    if non_positive.size:
        pairs = pairs[: non_positive[0]]
    pairs = np.minimum.accumulate(pairs)

    tau = -1.0 + 2.0 * float(np.sum(pairs))
    if tau <= 0:
        return float(n)
    return float(min(n / tau, n))


def ess_per_component(chain) -> np.ndarray:
    chain = _as_chain(chain)
    return np.array([ess(chain[:, k]) for k in range(chain.shape[1])])


def min_ess_per_grad(chain, grad_calls: int) -> float:
    """Minimum over components of ESS divided by the gradient calls spent."""
    if grad_calls <= 0:
        raise ConfigError(f"grad_calls must be positive, got {grad_calls}")
    return float(np.min(ess_per_component(chain))) / grad_calls


def esjd(chain) -> float:
    """Mean squared Euclidean jump between consecutive draws."""
    chain = _as_chain(chain)
    if chain.shape[0] < 2:
        raise ConfigError("ESJD needs at least 2 draws")
    jumps = np.diff(chain, axis=0)
    return float(np.mean(np.sum(jumps**2, axis=1)))


def ks_distance(sample, reference: Reference) -> float:
    """Kolmogorov-Smirnov distance sup_x |F(x) - G(x)|.

    Args:
        sample: Draws defining the empirical CDF F
        reference: Either another sample or an analytic CDF callable

    Returns:
        The KS statistic in [0, 1]
    """
    sample = np.asarray(sample, dtype=float).ravel()
    if sample.size == 0:
        raise ConfigError("KS distance needs a non-empty sample")

    if callable(reference):
        return float(stats.kstest(sample, reference, method="asymp").statistic)

    reference = np.asarray(reference, dtype=float).ravel()
    if reference.size == 0:
        raise ConfigError("KS distance needs a non-empty reference sample")
    return float(stats.ks_2samp(sample, reference, method="asymp").statistic)


def max_ks(chain, references) -> float:
    """Largest per-component KS distance.

    Args:
        chain: N x d draws
        references: A list of d references (samples or CDF callables), or a
            reference chain with d columns
    """
    chain = _as_chain(chain)
    d = chain.shape[1]
    if isinstance(references, np.ndarray):
        ref_chain = _as_chain(references)
        references = [ref_chain[:, k] for k in range(ref_chain.shape[1])]
    if len(references) != d:
        raise ConfigError(f"Expected {d} references, got {len(references)}")
    return max(ks_distance(chain[:, k], references[k]) for k in range(d))


@dataclass
class RunReport:
    """Efficiency and accuracy of one production run."""

    n_draws: int
    grad_calls: int
    accept_rate: float
    mean_accept_prob: float
    min_ess_per_grad: float
    esjd_per_grad: float
    ess: Tuple[float, ...] = ()
    group_min_ess_per_grad: Dict[str, float] = field(default_factory=dict)
    group_esjd_per_grad: Dict[str, float] = field(default_factory=dict)
    max_ks: Optional[float] = None
    divergences: int = 0

    def __post_init__(self):
        """Validates the report after initialization."""
        # prHMC moves along its cached orbit for free, so calls may be < draws
        if self.grad_calls <= 0:
            raise ConfigError(f"grad_calls must be positive, got {self.grad_calls}")
        if any(not e > 0 for e in self.ess):
            raise ConfigError("ESS entries must be positive")
        if self.esjd_per_grad < 0:
            raise ConfigError("ESJD cannot be negative")

    def to_dict(self) -> dict:
        """Flat mapping with a stable key order, one column per group metric."""
        row = {
            "n_draws": self.n_draws,
            "grad_calls": self.grad_calls,
            "accept_rate": self.accept_rate,
            "mean_accept_prob": self.mean_accept_prob,
            "min_ess_per_grad": self.min_ess_per_grad,
            "esjd_per_grad": self.esjd_per_grad,
            "max_ks": self.max_ks,
            "divergences": self.divergences,
        }
        for group in sorted(self.group_min_ess_per_grad):
            row[f"min_ess_per_grad[{group}]"] = self.group_min_ess_per_grad[group]
            row[f"esjd_per_grad[{group}]"] = self.group_esjd_per_grad[group]
        return row


def _report(chain: np.ndarray, grad_calls: int, model: "TargetModel", reference, **stats):
    if grad_calls <= 0:
        raise ConfigError("A production run must spend at least one gradient call")

    ess_values = ess_per_component(chain)
    group_ess = {}
    group_esjd = {}
    for name, cols in model.parameter_groups().items():
        group_ess[name] = float(np.min(ess_values[cols])) / grad_calls
        group_esjd[name] = esjd(chain[:, cols]) / grad_calls

    ks = None
    if reference is not None:
        ks = max_ks(chain, reference)

    return RunReport(
        n_draws=chain.shape[0],
        grad_calls=grad_calls,
        min_ess_per_grad=float(np.min(ess_values)) / grad_calls,
        esjd_per_grad=esjd(chain) / grad_calls,
        ess=tuple(float(e) for e in ess_values),
        group_min_ess_per_grad=group_ess,
        group_esjd_per_grad=group_esjd,
        max_ks=ks,
        **stats,
    )


def build_report(
    result: "SamplerResult",
    model: "TargetModel",
    reference=None,
) -> RunReport:
    """Computes the RunReport of a production run.

    Args:
        result: Output of a sampler
        model: The model that was sampled, for its parameter groups
        reference: Optional KS reference; see ``max_ks``

    Returns:
        RunReport with per-group efficiency and, if a reference is given, max KS
    """
    return _report(
        result.chain,
        result.grad_calls,
        model,
        reference,
        accept_rate=result.accept_rate,
        mean_accept_prob=result.mean_accept_prob,
        divergences=result.divergences,
    )


def chain_report(
    chain, grad_calls: int, model: "TargetModel", reference=None
) -> RunReport:
    """RunReport of a stored chain whose per-iteration statistics are gone.

    The acceptance rate is estimated as the share of draws that moved; the
    mean acceptance probability is unknown and reported as NaN.
    """
    chain = _as_chain(chain)
    moved = np.any(np.diff(chain, axis=0) != 0, axis=1)
    return _report(
        chain,
        int(grad_calls),
        model,
        reference,
        accept_rate=float(np.mean(moved)) if moved.size else 0.0,
        mean_accept_prob=float("nan"),
    )
