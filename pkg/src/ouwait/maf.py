"""Optimal threshold and minimum sum MSE for the feedback scheme.

With delivery feedback the scheduler keeps resampling the process with the
stalest estimate until it gets through, so one delivery cycle serves every
process once and consumes a geometric number of attempts per process. The
sampling constraint enters scaled by 1/(1-eps): waiting happens once per
cycle while attempts multiply with the erasure rate.
"""

from __future__ import annotations

from typing import Optional

from . import series
from .dinkelbach import solve_threshold
from .series import MixtureSpec
from .types import InvalidConfig, SolveResult, SystemConfig


def _mixture(cfg: SystemConfig) -> MixtureSpec:
    return MixtureSpec(k=cfg.k, mu=cfg.mu, eps=cfg.eps)


def epoch_mean_maf(tau: float, cfg: SystemConfig) -> float:
    """Expected epoch length: expected wait plus expected total service."""
    m = _mixture(cfg)
    return series.H_maf(tau, m) + m.mean_total_service


def _numerator_maf(tau: float, cfg: SystemConfig) -> float:
    m = _mixture(cfg)
    eg = series.H_maf(tau, m) + m.mean_total_service
    total = 0.0
    for p in cfg.processes:
        lap = series.laplace_exp_service(p.theta, cfg.mu)
        fk = series.F_maf(tau, p.theta, m)
        total += p.stationary_variance * (eg - (lap / (2.0 * p.theta)) * (1.0 - fk))
    return total


def mse_at_tau_maf(tau: float, cfg: SystemConfig) -> float:
    """Long-term average sum MSE achieved by threshold ``tau`` under feedback."""
    return _numerator_maf(tau, cfg) / epoch_mean_maf(tau, cfg)


def solve_maf(
    cfg: SystemConfig, tol: float = 1e-9, tau_max: Optional[float] = None
) -> SolveResult:
    """Nested-bisection solution of the feedback-scheme threshold problem.

    The binding branch solves ``(1-eps) * H(tau) = k/f_max - k/mu`` for tau,
    taking over whenever the unconstrained threshold would undershoot the
    sampling budget.
    """
    m = _mixture(cfg)
    constraint_level = (cfg.k / cfg.f_max - cfg.k / cfg.mu) / (1.0 - cfg.eps)
    if tau_max is None:
        tau_max = series.default_tau_max(cfg.processes, cfg.k, cfg.mu, cfg.eps)
        if constraint_level > 0:
            # The expected wait grows like tau minus the mean service total,
            # so this ceiling always brackets the constrained threshold.
            tau_max = max(tau_max, constraint_level + m.mean_total_service + 1.0)
    result, _ = solve_threshold(
        threshold_response=lambda x: series.G_maf(x, cfg.processes, cfg.mu),
        expected_wait=lambda t: series.H_maf(t, m),
        constraint_level=constraint_level,
        epoch_mean=lambda t: epoch_mean_maf(t, cfg),
        mse_numerator=lambda t: _numerator_maf(t, cfg),
        beta_hi=cfg.total_stationary_variance,
        tau_max=tau_max,
        tol=tol,
    )
    return result


def optimal_wait(z: float, tau: float) -> float:
    """Threshold waiting rule: wait until the conditioning total reaches ``tau``."""
    if z < 0:
        raise InvalidConfig(f"z must be nonnegative, got {z}")
    return max(tau - z, 0.0)
