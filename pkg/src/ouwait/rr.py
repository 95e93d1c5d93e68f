"""Optimal threshold and minimum sum MSE for the blind round-robin scheme.

Without delivery feedback the scheduler cycles through the processes in fixed
order, one fresh sample each per round, and waits once per round as a function
of the previous round's total service time. A process's epoch then spans a
geometric number of rounds. The sampling constraint is erasure-free here:
every round takes exactly k samples no matter what the channel does.
"""

from __future__ import annotations

from typing import Optional

from . import series
from .dinkelbach import solve_threshold
from .types import SolveResult, SystemConfig


def epoch_mean_rr(tau: float, cfg: SystemConfig) -> float:
    """Expected epoch length: one round's wait-plus-service over the success rate."""
    return (series.H_rr(tau, cfg.k, cfg.mu) + cfg.k / cfg.mu) / (1.0 - cfg.eps)


def _numerator_rr(tau: float, cfg: SystemConfig) -> float:
    eg = epoch_mean_rr(tau, cfg)
    total = 0.0
    for p in cfg.processes:
        lap = series.laplace_exp_service(p.theta, cfg.mu)
        fk = series.F_rr(tau, p.theta, cfg.k, cfg.mu, cfg.eps)
        total += p.stationary_variance * (eg - (lap / (2.0 * p.theta)) * (1.0 - fk))
    return total


def mse_at_tau_rr(tau: float, cfg: SystemConfig) -> float:
    """Long-term average sum MSE achieved by threshold ``tau`` without feedback."""
    return _numerator_rr(tau, cfg) / epoch_mean_rr(tau, cfg)


def solve_rr(
    cfg: SystemConfig, tol: float = 1e-9, tau_max: Optional[float] = None
) -> SolveResult:
    """Nested-bisection solution of the no-feedback threshold problem.

    The binding branch solves ``H(tau) = k/f_max - k/mu``; a nonpositive
    right-hand side leaves the constraint vacuous. The threshold response is
    evaluated pointwise with its round transform at the same argument and
    inverted by direct bisection, which its monotonicity licenses.
    """
    constraint_level = cfg.k / cfg.f_max - cfg.k / cfg.mu
    if tau_max is None:
        tau_max = series.default_tau_max(cfg.processes, cfg.k, cfg.mu, cfg.eps)
        if constraint_level > 0:
            tau_max = max(tau_max, constraint_level + cfg.k / cfg.mu + 1.0)
    result, _ = solve_threshold(
        threshold_response=lambda x: series.G_rr(x, cfg.processes, cfg.k, cfg.mu, cfg.eps),
        expected_wait=lambda t: series.H_rr(t, cfg.k, cfg.mu),
        constraint_level=constraint_level,
        epoch_mean=lambda t: epoch_mean_rr(t, cfg),
        mse_numerator=lambda t: _numerator_rr(t, cfg),
        beta_hi=cfg.total_stationary_variance,
        tau_max=tau_max,
        tol=tol,
    )
    return result
