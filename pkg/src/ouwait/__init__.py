"""Threshold-waiting solver and Monte Carlo validator for multi-process
remote estimation over a shared queue and an erasure channel.

Two scheduling regimes are covered: stalest-first with delivery feedback
(retry the same process until it gets through) and blind round robin. For
each, the package computes the optimal threshold waiting policy and the
minimum long-term average sum MSE, and cross-checks every analytic quantity
against a discrete-event simulation of the full system.
"""

from .cli import (
    Axis,
    ConfigFormatError,
    SweepRow,
    SweepSpec,
    read_config,
    run_sweep,
    write_config,
    write_csv,
)
from .maf import epoch_mean_maf, mse_at_tau_maf, optimal_wait, solve_maf
from .ou import inst_mse, mmse_estimate, mse_integral, ou_step
from .rr import epoch_mean_rr, mse_at_tau_rr, solve_rr
from .series import (
    F_maf,
    F_rr,
    G_maf,
    G_rr,
    H_maf,
    H_rr,
    L_rr,
    MixtureSpec,
    TruncationWarning,
    default_tau_max,
    invert_monotone,
    laplace_exp_service,
    mixture_weights,
    nb_weight,
    reg_inc_gamma,
)
from .sim import (
    EpochTrace,
    RoundTrace,
    maf_epoch_arrays,
    merge_sim_stats,
    rr_round_arrays,
    run_epoch_maf,
    run_round_rr,
    simulate,
)
from .types import (
    BracketError,
    ConvergenceError,
    InvalidConfig,
    ProcessParams,
    SampleRecord,
    Scheme,
    SimStats,
    SolveResult,
    SystemConfig,
    ThresholdPolicy,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "BracketError",
    "ConfigFormatError",
    "ConvergenceError",
    "EpochTrace",
    "F_maf",
    "F_rr",
    "G_maf",
    "G_rr",
    "H_maf",
    "H_rr",
    "InvalidConfig",
    "L_rr",
    "MixtureSpec",
    "ProcessParams",
    "RoundTrace",
    "SampleRecord",
    "Scheme",
    "SimStats",
    "SolveResult",
    "SweepRow",
    "SweepSpec",
    "SystemConfig",
    "ThresholdPolicy",
    "TruncationWarning",
    "default_tau_max",
    "epoch_mean_maf",
    "epoch_mean_rr",
    "inst_mse",
    "invert_monotone",
    "laplace_exp_service",
    "maf_epoch_arrays",
    "merge_sim_stats",
    "mixture_weights",
    "mmse_estimate",
    "mse_at_tau_maf",
    "mse_at_tau_rr",
    "mse_integral",
    "nb_weight",
    "optimal_wait",
    "ou_step",
    "read_config",
    "reg_inc_gamma",
    "rr_round_arrays",
    "run_epoch_maf",
    "run_round_rr",
    "run_sweep",
    "simulate",
    "solve_maf",
    "solve_rr",
    "write_config",
    "write_csv",
]
