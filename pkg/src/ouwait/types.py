"""Core domain types and exceptions shared across the package."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple


class InvalidConfig(ValueError):
    """Raised when a parameter set violates its domain constraints."""


class BracketError(ValueError):
    """Raised when a root bracket does not straddle the target value."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine exhausts its iteration budget."""


@dataclass(frozen=True)
class ProcessParams:
    """Mean-reversion rate and squared diffusion amplitude of one process.

    The stationary variance of the process is ``sigma_sq / (2 * theta)``.
    """

    theta: float
    sigma_sq: float

    def __post_init__(self) -> None:
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise InvalidConfig(f"theta must be positive and finite, got {self.theta}")
        if not (self.sigma_sq > 0 and math.isfinite(self.sigma_sq)):
            raise InvalidConfig(f"sigma_sq must be positive and finite, got {self.sigma_sq}")

    @property
    def stationary_variance(self) -> float:
        return self.sigma_sq / (2.0 * self.theta)


@dataclass(frozen=True)
class SampleRecord:
    """A time-stamped sample value taken from one process."""

    value: float
    stamp: float

    def __post_init__(self) -> None:
        if self.stamp < 0:
            raise InvalidConfig(f"stamp must be nonnegative, got {self.stamp}")


class Scheme(enum.Enum):
    """Scheduling discipline: retry-same-process with feedback, or blind round robin."""

    MAF_FEEDBACK = "maf"
    RR_NO_FEEDBACK = "rr"


@dataclass(frozen=True)
class SystemConfig:
    """Full problem instance: process set, service rate, erasure rate, sampling budget."""

    k: int
    f_max: float
    mu: float
    eps: float
    processes: Tuple[ProcessParams, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if len(self.processes) != self.k:
            raise InvalidConfig(
                f"process list length {len(self.processes)} does not match k={self.k}"
            )
        if not (self.f_max > 0 and math.isfinite(self.f_max)):
            raise InvalidConfig(f"f_max must be positive, got {self.f_max}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise InvalidConfig(f"mu must be positive, got {self.mu}")
        if not (0.0 <= self.eps < 1.0):
            raise InvalidConfig(f"eps must lie in [0, 1), got {self.eps}")
        object.__setattr__(self, "processes", tuple(self.processes))

    @property
    def total_stationary_variance(self) -> float:
        """Upper bound on any achievable long-term average sum MSE."""
        return sum(p.stationary_variance for p in self.processes)

    def thetas(self) -> Tuple[float, ...]:
        return tuple(p.theta for p in self.processes)

    def sigma_sqs(self) -> Tuple[float, ...]:
        return tuple(p.sigma_sq for p in self.processes)


@dataclass(frozen=True)
class ThresholdPolicy:
    """A waiting policy w(z) = max(tau - z, 0) under the given scheme."""

    scheme: Scheme
    tau: float

    def __post_init__(self) -> None:
        if not (self.tau >= 0 and math.isfinite(self.tau)):
            raise InvalidConfig(f"tau must be nonnegative and finite, got {self.tau}")


@dataclass(frozen=True)
class SolveResult:
    """Optimal threshold and minimum sum MSE, with solver diagnostics."""

    tau_star: float
    beta_star: float
    binding: bool
    outer_iters: int
    achieved_tol: float


@dataclass(frozen=True)
class SimStats:
    """Estimates from one simulation run, with batch-means standard errors.

    ``epochs`` counts the post-burn-in epochs that entered the statistics.
    The OU probe fields are populated only when path co-simulation is on.
    """

    scheme: Scheme
    sum_mse: float
    sum_mse_se: float
    per_process_mse: Tuple[float, ...]
    per_process_mse_se: Tuple[float, ...]
    mean_epoch_len: float
    mean_epoch_len_se: float
    per_process_inter_sample_mean: Tuple[float, ...]
    epochs: int
    ou_probe_mse: Optional[float] = None
    ou_probe_ref: Optional[float] = None
    ou_probe_diff_se: Optional[float] = None
