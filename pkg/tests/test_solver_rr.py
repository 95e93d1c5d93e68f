"""No-feedback solver: fixed points, constant binding branch, erasure behavior."""

from dataclasses import replace

import numpy as np
import pytest

from ouwait import (
    G_rr,
    H_rr,
    ProcessParams,
    SystemConfig,
    invert_monotone,
    mse_at_tau_maf,
    mse_at_tau_rr,
    solve_maf,
    solve_rr,
)

TOL = 1e-9


def test_zero_threshold_anchor(single_process_cfg):
    assert mse_at_tau_rr(0.0, single_process_cfg) == pytest.approx(0.75, abs=1e-12)


def test_matches_feedback_scheme_without_erasures(two_process_cfg):
    cfg = replace(two_process_cfg, eps=0.0)
    for tau in (0.0, 0.4, 1.1, 3.0):
        assert mse_at_tau_rr(tau, cfg) == pytest.approx(
            mse_at_tau_maf(tau, cfg), abs=1e-10
        )


def test_mse_saturates(two_process_cfg):
    sat = two_process_cfg.total_stationary_variance
    assert mse_at_tau_rr(1e7, two_process_cfg) == pytest.approx(sat, rel=1e-6)


def test_self_consistency_first_order_local_opt(two_process_cfg):
    res = solve_rr(two_process_cfg, tol=TOL)
    assert res.beta_star == pytest.approx(mse_at_tau_rr(res.tau_star, two_process_cfg),
                                          abs=10 * TOL)
    assert not res.binding
    assert G_rr(
        res.tau_star, two_process_cfg.processes, two_process_cfg.k,
        two_process_cfg.mu, two_process_cfg.eps,
    ) == pytest.approx(res.beta_star, abs=10 * TOL)
    for delta in (1e-3, 1e-2):
        for tau in (res.tau_star - delta, res.tau_star + delta):
            assert mse_at_tau_rr(tau, two_process_cfg) >= res.beta_star - 10 * TOL


def test_binding_threshold_constant_in_erasure_rate(two_process_cfg):
    taus = []
    for eps in (0.0, 0.1, 0.3, 0.5, 0.7):
        cfg = replace(two_process_cfg, f_max=0.5, eps=eps)
        res = solve_rr(cfg, tol=TOL)
        assert res.binding
        taus.append(res.tau_star)
    assert max(taus) - min(taus) <= 1e-9
    target = two_process_cfg.k / 0.5 - two_process_cfg.k / two_process_cfg.mu
    ref = invert_monotone(
        lambda t: H_rr(t, two_process_cfg.k, two_process_cfg.mu), target, 0.0, 200.0,
        tol=1e-11,
    )
    assert taus[0] == pytest.approx(ref, abs=1e-6)


def test_threshold_nonincreasing_in_erasure_rate(two_process_cfg):
    taus = [
        solve_rr(replace(two_process_cfg, eps=e)).tau_star
        for e in np.arange(0.0, 0.901, 0.05)
    ]
    assert all(b <= a + 1e-9 for a, b in zip(taus, taus[1:]))


def test_zero_wait_regime_at_high_erasure(two_process_cfg):
    res = solve_rr(replace(two_process_cfg, eps=0.8))
    assert res.tau_star <= 1e-6
    assert res.beta_star == pytest.approx(
        mse_at_tau_rr(0.0, replace(two_process_cfg, eps=0.8)), abs=1e-7
    )


def test_saturation_onset_near_unit_budget(two_process_cfg):
    # With the budget just under the service rate the unconstrained threshold
    # decays with the erasure rate until the constraint pins it.
    cfg95 = replace(two_process_cfg, f_max=0.95)
    onset = None
    for eps in np.arange(0.0, 0.51, 0.05):
        res = solve_rr(replace(cfg95, eps=eps))
        if res.binding:
            onset = eps
            break
    assert onset is not None and 0.1 <= onset <= 0.3
    target = 2 / 0.95 - 2.0
    ref = invert_monotone(lambda t: H_rr(t, 2, 1.0), target, 0.0, 100.0, tol=1e-11)
    assert solve_rr(replace(cfg95, eps=0.5)).tau_star == pytest.approx(ref, abs=1e-6)


def test_coincides_with_feedback_solver_without_erasures(two_process_cfg):
    rng = np.random.default_rng(1234)
    for _ in range(20):
        k = int(rng.integers(1, 5))
        procs = tuple(
            ProcessParams(theta=float(rng.uniform(0.1, 1.0)),
                          sigma_sq=float(rng.uniform(0.5, 2.0)))
            for _ in range(k)
        )
        cfg = SystemConfig(
            k=k,
            f_max=float(rng.uniform(0.3, 2.0)),
            mu=float(rng.uniform(0.5, 2.0)),
            eps=0.0,
            processes=procs,
        )
        a = solve_maf(cfg, tol=TOL)
        b = solve_rr(cfg, tol=TOL)
        assert abs(a.tau_star - b.tau_star) <= 1e-6
        assert abs(a.beta_star - b.beta_star) <= 1e-6
