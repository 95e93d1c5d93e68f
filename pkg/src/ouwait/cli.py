"""Command-line front end: single solves, simulations, and parameter sweeps.

Sweeps reproduce the threshold and MSE curves against erasure probability,
process count, per-process reversion rate, or sampling budget, emitting one
CSV row per (axis value, scheme). Solver trouble at a grid point is recorded
in that row's status column instead of aborting the sweep.

Config file grammar (one ``key = value`` per line, ``#`` comments, arrays
comma-separated)::

    k = 2
    mu = 1.0
    eps = 0.3
    fmax = 1.5
    theta = 0.1, 0.5
    sigma_sq = 1.0, 2.0
    axis = eps
    grid = 0.0, 0.1, 0.2, 0.3
    schemes = maf, rr
    include_zero_wait = true
    sim_validate = false
    n_epochs = 100000
    seed = 1

CLI flags override file values. Axis ``theta_j`` varies the last process's
reversion rate; axis ``k`` requires all processes identical and replicates
the first one. Simulation seeds are derived per row as ``seed + row index``.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .maf import mse_at_tau_maf, solve_maf
from .rr import mse_at_tau_rr, solve_rr
from .sim import simulate
from .types import (
    ConvergenceError,
    InvalidConfig,
    ProcessParams,
    Scheme,
    SystemConfig,
    ThresholdPolicy,
)

CSV_HEADER = (
    "axis,value,scheme,tau_star,beta_star,binding,zero_wait_mse,sim_mse,sim_stderr,status"
)


class ConfigFormatError(ValueError):
    """Raised on malformed config files, carrying line and field context."""


class Axis(enum.Enum):
    EPS = "eps"
    K = "k"
    THETA_J = "theta_j"
    FMAX = "fmax"


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a base instance, an axis with its grid, and output options."""

    base: SystemConfig
    axis: Axis
    grid: Tuple[float, ...]
    schemes: Tuple[Scheme, ...]
    include_zero_wait: bool = False
    sim_validate: bool = False
    n_epochs: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.grid:
            raise InvalidConfig("grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise InvalidConfig("grid must be strictly increasing")
        if not self.schemes:
            raise InvalidConfig("at least one scheme required")
        for v in self.grid:
            if self.axis is Axis.EPS and not (0.0 <= v < 1.0):
                raise InvalidConfig(f"eps grid value {v} outside [0, 1)")
            if self.axis is Axis.K and (v < 1 or int(v) != v):
                raise InvalidConfig(f"k grid value {v} is not a positive integer")
            if self.axis is Axis.THETA_J and v <= 0:
                raise InvalidConfig(f"theta grid value {v} must be positive")
            if self.axis is Axis.FMAX and v <= 0:
                raise InvalidConfig(f"fmax grid value {v} must be positive")
        if self.n_epochs < 1:
            raise InvalidConfig("n_epochs must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    axis: Axis
    value: float
    scheme: Scheme
    tau_star: Optional[float]
    beta_star: Optional[float]
    binding: Optional[bool]
    zero_wait_mse: Optional[float]
    sim_mse: Optional[float]
    sim_stderr: Optional[float]
    status: str = "ok"


def config_at(base: SystemConfig, axis: Axis, value: float) -> SystemConfig:
    """Instantiate the base config at one axis value."""
    if axis is Axis.EPS:
        return replace(base, eps=float(value))
    if axis is Axis.FMAX:
        return replace(base, f_max=float(value))
    if axis is Axis.THETA_J:
        procs = list(base.processes)
        procs[-1] = replace(procs[-1], theta=float(value))
        return replace(base, processes=tuple(procs))
    if len(set(base.processes)) != 1:
        raise InvalidConfig("k-axis sweeps need identical processes in the base config")
    k = int(value)
    return replace(base, k=k, processes=(base.processes[0],) * k)


def _solve_row(spec: SweepSpec, scheme: Scheme, value: float, row_index: int) -> SweepRow:
    cfg = config_at(spec.base, spec.axis, value)
    solve = solve_maf if scheme is Scheme.MAF_FEEDBACK else solve_rr
    mse_at = mse_at_tau_maf if scheme is Scheme.MAF_FEEDBACK else mse_at_tau_rr
    try:
        res = solve(cfg)
    except (ConvergenceError, InvalidConfig) as exc:
        return SweepRow(
            spec.axis, value, scheme, None, None, None, None, None, None,
            status=f"solver_failed:{type(exc).__name__}",
        )
    zero_wait = mse_at(0.0, cfg) if spec.include_zero_wait else None
    sim_mse = sim_se = None
    if spec.sim_validate:
        burn = min(1000, max(0, spec.n_epochs - 2))
        stats = simulate(
            cfg,
            ThresholdPolicy(scheme, res.tau_star),
            n_epochs=spec.n_epochs,
            seed=spec.seed + row_index,
            burn_in=burn,
        )
        sim_mse, sim_se = stats.sum_mse, stats.sum_mse_se
    return SweepRow(
        spec.axis, value, scheme, res.tau_star, res.beta_star, res.binding,
        zero_wait, sim_mse, sim_se,
    )


def run_sweep(spec: SweepSpec) -> List[SweepRow]:
    """Evaluate every (axis value, scheme) pair, in grid order."""
    rows = []
    for value in spec.grid:
        for scheme in spec.schemes:
            rows.append(_solve_row(spec, scheme, value, len(rows)))
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    return f"{x:.12g}"


def write_csv(rows: Sequence[SweepRow], path: str) -> None:
    """Write sweep rows atomically (write then rename, same directory)."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.axis.value,
                    _fmt(r.value),
                    r.scheme.value,
                    _fmt(r.tau_star),
                    _fmt(r.beta_star),
                    _fmt(r.binding),
                    _fmt(r.zero_wait_mse),
                    _fmt(r.sim_mse),
                    _fmt(r.sim_stderr),
                    r.status,
                ]
            )
        )
    payload = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sweep-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_bool(raw: str, field: str, lineno: int) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ConfigFormatError(f"line {lineno}: field '{field}': not a boolean: {raw!r}")


def _parse_floats(raw: str, field: str, lineno: int) -> Tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ConfigFormatError(f"line {lineno}: field '{field}': not a number list: {raw!r}")


def read_config(path: str) -> SweepSpec:
    """Parse a sweep config file; malformed lines report line and field."""
    entries: Dict[str, Tuple[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigFormatError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, _, value = body.partition("=")
            entries[key.strip().lower()] = (value.strip(), lineno)

    def need(field: str) -> Tuple[str, int]:
        if field not in entries:
            raise ConfigFormatError(f"missing required field '{field}'")
        return entries[field]

    def number(field: str, cast):
        raw, lineno = need(field)
        try:
            return cast(raw)
        except ValueError:
            raise ConfigFormatError(f"line {lineno}: field '{field}': bad value {raw!r}")

    k = number("k", int)
    mu = number("mu", float)
    eps = number("eps", float)
    fmax = number("fmax", float)
    theta_raw, theta_line = need("theta")
    sigma_raw, sigma_line = need("sigma_sq")
    thetas = _parse_floats(theta_raw, "theta", theta_line)
    sigmas = _parse_floats(sigma_raw, "sigma_sq", sigma_line)
    if len(thetas) != k or len(sigmas) != k:
        raise ConfigFormatError(
            f"line {theta_line}: theta/sigma_sq arrays must each have k={k} entries"
        )
    try:
        base = SystemConfig(
            k=k, f_max=fmax, mu=mu, eps=eps,
            processes=tuple(ProcessParams(t, s) for t, s in zip(thetas, sigmas)),
        )
    except InvalidConfig as exc:
        raise ConfigFormatError(f"invalid system parameters: {exc}")

    axis_raw, axis_line = need("axis")
    try:
        axis = Axis(axis_raw.lower())
    except ValueError:
        raise ConfigFormatError(f"line {axis_line}: field 'axis': unknown axis {axis_raw!r}")
    grid_raw, grid_line = need("grid")
    grid = _parse_floats(grid_raw, "grid", grid_line)
    schemes_raw, schemes_line = need("schemes")
    schemes = []
    for tok in schemes_raw.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        try:
            schemes.append(Scheme(tok))
        except ValueError:
            raise ConfigFormatError(
                f"line {schemes_line}: field 'schemes': unknown scheme {tok!r}"
            )
    kwargs = {}
    if "include_zero_wait" in entries:
        raw, lineno = entries["include_zero_wait"]
        kwargs["include_zero_wait"] = _parse_bool(raw, "include_zero_wait", lineno)
    if "sim_validate" in entries:
        raw, lineno = entries["sim_validate"]
        kwargs["sim_validate"] = _parse_bool(raw, "sim_validate", lineno)
    if "n_epochs" in entries:
        kwargs["n_epochs"] = number("n_epochs", int)
    if "seed" in entries:
        kwargs["seed"] = number("seed", int)
    try:
        return SweepSpec(
            base=base, axis=axis, grid=grid, schemes=tuple(schemes), **kwargs
        )
    except InvalidConfig as exc:
        raise ConfigFormatError(f"invalid sweep spec: {exc}")


def write_config(spec: SweepSpec, path: str) -> None:
    """Emit a config file that reads back to an equal SweepSpec."""
    lines = [
        f"k = {spec.base.k}",
        f"mu = {spec.base.mu!r}",
        f"eps = {spec.base.eps!r}",
        f"fmax = {spec.base.f_max!r}",
        "theta = " + ", ".join(repr(p.theta) for p in spec.base.processes),
        "sigma_sq = " + ", ".join(repr(p.sigma_sq) for p in spec.base.processes),
        f"axis = {spec.axis.value}",
        "grid = " + ", ".join(repr(v) for v in spec.grid),
        "schemes = " + ", ".join(s.value for s in spec.schemes),
        f"include_zero_wait = {'true' if spec.include_zero_wait else 'false'}",
        f"sim_validate = {'true' if spec.sim_validate else 'false'}",
        f"n_epochs = {spec.n_epochs}",
        f"seed = {spec.seed}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _add_system_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, help="number of processes")
    p.add_argument("--mu", type=float, help="service rate")
    p.add_argument("--eps", type=float, help="erasure probability")
    p.add_argument("--fmax", type=float, help="total sampling frequency budget")
    p.add_argument("--theta", type=str, help="comma-separated reversion rates")
    p.add_argument("--sigma-sq", type=str, help="comma-separated squared amplitudes")
    p.add_argument("--tol", type=float, default=1e-9, help="solver tolerance")
    p.add_argument("--tau-max", type=float, default=None, help="threshold search ceiling")
    p.add_argument("--epochs", type=int, default=None, help="simulation epochs (default 100000)")
    p.add_argument("--seed", type=int, default=None, help="base RNG seed (default 0)")
    p.add_argument("--burn-in", type=int, default=None,
                   help="discarded initial epochs (default 1000)")
    p.add_argument("--out", type=str, default=None, help="output CSV path")


def _system_from_args(args: argparse.Namespace) -> SystemConfig:
    missing = [f for f in ("k", "mu", "eps", "fmax", "theta", "sigma_sq")
               if getattr(args, f) is None]
    if missing:
        raise InvalidConfig(f"missing required flags: {', '.join('--' + m for m in missing)}")
    thetas = tuple(float(t) for t in args.theta.split(","))
    sigmas = tuple(float(s) for s in args.sigma_sq.split(","))
    if len(thetas) != args.k or len(sigmas) != args.k:
        raise InvalidConfig("theta and sigma-sq need one entry per process")
    return SystemConfig(
        k=args.k, f_max=args.fmax, mu=args.mu, eps=args.eps,
        processes=tuple(ProcessParams(t, s) for t, s in zip(thetas, sigmas)),
    )


def _cmd_solve(args: argparse.Namespace, scheme: Scheme) -> int:
    cfg = _system_from_args(args)
    solve = solve_maf if scheme is Scheme.MAF_FEEDBACK else solve_rr
    res = solve(cfg, tol=args.tol, tau_max=args.tau_max)
    print(
        f"scheme={scheme.value} tau_star={res.tau_star:.9g} beta_star={res.beta_star:.9g} "
        f"binding={int(res.binding)} outer_iters={res.outer_iters} "
        f"achieved_tol={res.achieved_tol:.3g}"
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _system_from_args(args)
    scheme = Scheme(args.scheme)
    if args.tau is not None:
        tau = args.tau
    else:
        res = (solve_maf if scheme is Scheme.MAF_FEEDBACK else solve_rr)(
            cfg, tol=args.tol, tau_max=args.tau_max
        )
        tau = res.tau_star
    epochs = args.epochs if args.epochs is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    burn = args.burn_in if args.burn_in is not None else 1000
    stats = simulate(
        cfg, ThresholdPolicy(scheme, tau), n_epochs=epochs, seed=seed,
        burn_in=min(burn, epochs - 2), trace_path=args.trace,
    )
    print(
        f"scheme={scheme.value} tau={tau:.9g} sum_mse={stats.sum_mse:.6g} "
        f"(se {stats.sum_mse_se:.2g}) mean_epoch={stats.mean_epoch_len:.6g} "
        f"epochs={stats.epochs}"
    )
    for i, (m, s) in enumerate(zip(stats.per_process_mse, stats.per_process_mse_se)):
        print(f"  process {i + 1}: mse={m:.6g} (se {s:.2g}) "
              f"inter_sample={stats.per_process_inter_sample_mean[i]:.6g}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config_path = args.config_flag or args.config
    if not config_path:
        raise ConfigFormatError("sweep needs a config file (positional or --config)")
    spec = read_config(config_path)
    overrides = {}
    if args.epochs is not None:
        overrides["n_epochs"] = args.epochs
    if args.seed is not None:
        overrides["seed"] = args.seed
    base = spec.base
    for field, attr in (("eps", "eps"), ("mu", "mu"), ("fmax", "f_max")):
        v = getattr(args, field)
        if v is not None:
            base = replace(base, **{attr: v})
    if base is not spec.base:
        overrides["base"] = base
    if overrides:
        spec = replace(spec, **overrides)
    rows = run_sweep(spec)
    if args.out:
        write_csv(rows, args.out)
    else:
        print(CSV_HEADER)
        for r in rows:
            print(
                ",".join([
                    r.axis.value, _fmt(r.value), r.scheme.value, _fmt(r.tau_star),
                    _fmt(r.beta_star), _fmt(r.binding), _fmt(r.zero_wait_mse),
                    _fmt(r.sim_mse), _fmt(r.sim_stderr), r.status,
                ])
            )
    return 0 if all(r.status == "ok" for r in rows) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ouwait",
        description="Threshold-waiting solver and simulator for shared-queue remote estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_maf = sub.add_parser("solve-maf", help="optimal threshold, feedback scheme")
    _add_system_flags(p_maf)
    p_maf.set_defaults(func=lambda a: _cmd_solve(a, Scheme.MAF_FEEDBACK))

    p_rr = sub.add_parser("solve-rr", help="optimal threshold, no-feedback scheme")
    _add_system_flags(p_rr)
    p_rr.set_defaults(func=lambda a: _cmd_solve(a, Scheme.RR_NO_FEEDBACK))

    p_sim = sub.add_parser("simulate", help="Monte Carlo run at a given or optimal threshold")
    _add_system_flags(p_sim)
    p_sim.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)
    p_sim.add_argument("--tau", type=float, default=None,
                       help="threshold (defaults to the solver's optimum)")
    p_sim.add_argument("--trace", type=str, default=None, help="epoch trace dump path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="evaluate a config-file sweep, write CSV")
    p_sweep.add_argument("config", nargs="?", help="sweep config file")
    p_sweep.add_argument("--config", dest="config_flag", default=None)
    _add_system_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, ConfigFormatError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
