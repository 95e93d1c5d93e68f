"""Nested bisection for the ratio-minimization shared by both schemes.

The outer loop bisects the candidate sum-MSE value beta on
``[0, sum of stationary variances]``, driving the auxiliary residual
``p(beta) = numerator(tau(beta)) - beta * epoch_mean(tau(beta))`` to zero.
The inner loop maps each beta to its threshold: the inverse of the threshold
response at beta, replaced by the constraint-determined threshold whenever the
expected wait at the unconstrained threshold falls short of the required level.

``p`` is strictly decreasing over the bracket, so ``p > 0`` raises the lower
beta bound. The sign change is asserted before bisecting.
"""

from __future__ import annotations

import math
from typing import Callable, Tuple

from .series import invert_monotone
from .types import ConvergenceError, InvalidConfig, SolveResult


def _invert_clamped(
    f: Callable[[float], float], target: float, hi: float, tol: float
) -> float:
    # Zero-threshold clamp: a target at or below f(0) realizes the zero-wait
    # regime; a target at or above f(hi) is numerically saturated.
    if f(0.0) >= target:
        return 0.0
    if f(hi) <= target:
        return hi
    return invert_monotone(f, target, 0.0, hi, tol)


def solve_threshold(
    threshold_response: Callable[[float], float],
    expected_wait: Callable[[float], float],
    constraint_level: float,
    epoch_mean: Callable[[float], float],
    mse_numerator: Callable[[float], float],
    beta_hi: float,
    tau_max: float,
    tol: float = 1e-9,
) -> Tuple[SolveResult, float]:
    """Run the nested bisection; returns the result and the final threshold.

    ``constraint_level`` is the minimum admissible expected wait; nonpositive
    values make the sampling constraint vacuous. The inner bisections run at
    ``tol / 10`` so the outer residual is not noise-limited.
    """
    if tol <= 0 or not math.isfinite(tol):
        raise InvalidConfig(f"tol must be positive, got {tol}")
    if tau_max <= 0 or not math.isfinite(tau_max):
        raise InvalidConfig(f"tau_max must be positive, got {tau_max}")
    inner_tol = tol / 10.0

    if constraint_level > 0 and expected_wait(tau_max) < constraint_level:
        raise InvalidConfig(
            f"tau_max={tau_max} cannot satisfy the sampling constraint "
            f"(expected wait {expected_wait(tau_max)} < {constraint_level})"
        )

    def tau_of(beta: float) -> Tuple[float, bool]:
        tau0 = _invert_clamped(threshold_response, beta, tau_max, inner_tol)
        if constraint_level > 0 and expected_wait(tau0) < constraint_level:
            tau = _invert_clamped(expected_wait, constraint_level, tau_max, inner_tol)
            return tau, True
        return tau0, False

    def residual(beta: float) -> Tuple[float, float, bool]:
        tau, binding = tau_of(beta)
        return mse_numerator(tau) - beta * epoch_mean(tau), tau, binding

    p_lo, _, _ = residual(0.0)
    p_hi, _, _ = residual(beta_hi)
    if not (p_lo > 0 >= p_hi):
        raise ConvergenceError(
            f"auxiliary residual lacks a sign change: p(0)={p_lo}, p({beta_hi})={p_hi}"
        )

    lo, hi = 0.0, beta_hi
    iters = 0
    max_iters = int(math.ceil(math.log2(max(beta_hi / tol, 2.0)))) + 8
    while hi - lo > tol and iters < max_iters:
        mid = 0.5 * (lo + hi)
        p_mid, _, _ = residual(mid)
        if p_mid > 0:
            lo = mid
        else:
            hi = mid
        iters += 1
    if hi - lo > tol:
        raise ConvergenceError(f"outer bisection stalled at width {hi - lo}")

    beta_star = 0.5 * (lo + hi)
    _, tau_star, binding = residual(beta_star)
    return (
        SolveResult(
            tau_star=tau_star,
            beta_star=beta_star,
            binding=binding,
            outer_iters=iters,
            achieved_tol=hi - lo,
        ),
        tau_star,
    )
