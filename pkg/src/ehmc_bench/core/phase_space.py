from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConfigError


class MassKind(Enum):
    """Enum for the supported mass matrix structures."""

    IDENTITY = "identity"
    DIAGONAL = "diagonal"


@dataclass(frozen=True)
class MassSpec:
    """Covariance M of the auxiliary momentum, identity or diagonal."""

    kind: MassKind = MassKind.IDENTITY
    diag: Optional[np.ndarray] = None

    def __post_init__(self):
        """Validates the mass specification after initialization."""
        if isinstance(self.kind, str):
            try:
                object.__setattr__(self, "kind", MassKind(self.kind))
            except ValueError:
                raise ConfigError(
                    f"Invalid mass kind: {self.kind}. Must be 'identity' or 'diagonal'"
                )

        if self.kind == MassKind.IDENTITY:
            if self.diag is not None:
                raise ConfigError("Identity mass must not carry a diagonal")
            return

        if self.diag is None:
            raise ConfigError("Diagonal mass requires a diagonal vector")
        diag = np.asarray(self.diag, dtype=float)
        if diag.ndim != 1 or diag.size == 0:
            raise ConfigError("Mass diagonal must be a non-empty vector")
        if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
            raise ConfigError("Mass diagonal entries must be finite and positive")
        object.__setattr__(self, "diag", diag)

    @classmethod
    def identity(cls) -> "MassSpec":
        return cls(MassKind.IDENTITY)

    @classmethod
    def diagonal(cls, diag) -> "MassSpec":
        return cls(MassKind.DIAGONAL, np.asarray(diag, dtype=float))

    def check_dim(self, d: int) -> None:
        """Raises ConfigError if a diagonal mass does not match dimension d."""
        if self.kind == MassKind.DIAGONAL and self.diag.size != d:
            raise ConfigError(
                f"Mass diagonal has length {self.diag.size}, expected {d}"
            )

    def inverse_apply(self, v: np.ndarray) -> np.ndarray:
        """Returns M^-1 v."""
        if self.kind == MassKind.IDENTITY:
            return v
        return v / self.diag

    def kinetic_energy(self, v: np.ndarray) -> float:
        """Returns 1/2 v^T M^-1 v."""
        return 0.5 * float(np.dot(v, self.inverse_apply(v)))

    def std(self, d: int) -> np.ndarray:
        """Returns the standard deviations of the momentum components."""
        if self.kind == MassKind.IDENTITY:
            return np.ones(d)
        return np.sqrt(self.diag)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "diag": None if self.diag is None else self.diag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MassSpec":
        """Inverse of ``to_dict``."""
        return cls(data.get("kind", MassKind.IDENTITY.value), data.get("diag"))


@dataclass
class PhasePoint:
    """A position-momentum pair (theta, v).

    ``potential`` and ``grad`` hold U(theta) and its gradient once they have
    been computed, so the integrator never evaluates the same position twice.
    """

    theta: np.ndarray
    v: np.ndarray
    potential: Optional[float] = field(default=None, repr=False, compare=False)
    grad: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        """Validates shapes after initialization."""
        self.theta = np.asarray(self.theta, dtype=float)
        self.v = np.asarray(self.v, dtype=float)

        if self.theta.ndim != 1 or self.theta.size == 0:
            raise ConfigError("Position must be a non-empty vector")

        if self.v.shape != self.theta.shape:
            raise ConfigError(
                f"Momentum has length {self.v.size}, position has {self.theta.size}"
            )

    @property
    def dim(self) -> int:
        return self.theta.size

    def with_momentum(self, v: np.ndarray) -> "PhasePoint":
        """Returns the point at the same position with momentum v, keeping the cache."""
        return PhasePoint(self.theta, v, self.potential, self.grad)

    def flipped(self) -> "PhasePoint":
        """Returns (theta, -v) with the cached position data kept."""
        return self.with_momentum(-self.v)


@dataclass(frozen=True)
class HamiltonianValue:
    """Potential, kinetic and total energy of a phase point."""

    potential_energy: float
    kinetic_energy: float

    @property
    def total(self) -> float:
        return self.potential_energy + self.kinetic_energy
