"""Discrete-event Monte Carlo of the full sampling system, both schemes.

The simulator is the independent check on every analytic quantity: it draws
actual service times and erasure outcomes, applies the threshold waiting rule
to the realized service totals, tracks each process's information age on the
shared timeline, and accumulates estimation error exactly between events with
the closed-form integral from :mod:`ouwait.ou`.

Event mechanics
---------------
Feedback scheme: an epoch opens with a single wait ``max(tau - Z, 0)`` where
``Z`` is the previous epoch's total service time, then serves process 1
through K back to back, redrawing a fresh sample on every erased attempt.
The epoch's own service total conditions the next epoch's wait.

Blind round robin: each transmission round opens with a wait conditioned on
the previous round's total service time, then takes one fresh sample from
every process in fixed order; erasures are discovered only at the receiver,
so a process's epoch spans a geometric number of rounds.

A process's age resets at each of its deliveries to the delivering attempt's
own service time (samples are stamped when generated). The first wait's
conditioning value is drawn as one unmeasured epoch or round, and ``burn_in``
initial epochs are discarded on top of that. Standard errors come from batch
means over epochs (100 batches).

Randomness is split into named substreams (service, erasure, OU noise) from
one seed, so identical seeds give bit-identical statistics and both schemes
can be compared on matched draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import ou
from .types import (
    ConvergenceError,
    InvalidConfig,
    SampleRecord,
    Scheme,
    SimStats,
    SystemConfig,
    ThresholdPolicy,
)

ATTEMPT_CAP = 10**7
BATCH_COUNT = 100

__all__ = [
    "EpochTrace",
    "RoundTrace",
    "run_epoch_maf",
    "run_round_rr",
    "maf_epoch_arrays",
    "rr_round_arrays",
    "simulate",
    "merge_sim_stats",
]


@dataclass(frozen=True)
class EpochTrace:
    """Full record of one feedback-scheme epoch.

    ``services[k]`` lists the service time of every attempt for process k,
    the successful one last. ``gamma`` equals the wait plus all services.
    """

    scheme: Scheme
    wait: float
    services: Tuple[Tuple[float, ...], ...]
    attempts: Tuple[int, ...]
    gamma: float
    service_total: float
    deliveries: Tuple[float, ...]
    stamps: Tuple[float, ...]

    def __post_init__(self) -> None:
        if any(m < 1 for m in self.attempts):
            raise InvalidConfig("every process needs at least one attempt")


@dataclass(frozen=True)
class RoundTrace:
    """Record of one blind transmission round.

    ``deliveries[k]`` / ``stamps[k]`` are None when process k's sample was
    erased this round. ``length`` is the round's wall-clock extent.
    """

    wait: float
    services: Tuple[float, ...]
    erased: Tuple[bool, ...]
    round_total: float
    length: float
    deliveries: Tuple[Optional[float], ...]
    stamps: Tuple[Optional[float], ...]


def run_epoch_maf(
    rng: np.random.Generator,
    cfg: SystemConfig,
    tau: float,
    prev_total_service: float,
    start_time: float = 0.0,
) -> EpochTrace:
    """Simulate one feedback epoch event by event.

    Applies the wait conditioned on the previous epoch's total service, then
    retries each process until its sample survives the channel. The returned
    ``service_total`` is what conditions the next epoch's wait.
    """
    if prev_total_service < 0:
        raise InvalidConfig("prev_total_service must be nonnegative")
    if tau < 0:
        raise InvalidConfig("tau must be nonnegative")
    wait = max(tau - prev_total_service, 0.0)
    t = start_time + wait
    services = []
    attempts = []
    deliveries = []
    stamps = []
    for _ in range(cfg.k):
        burst = []
        while True:
            if len(burst) >= ATTEMPT_CAP:
                raise ConvergenceError(f"attempt cap {ATTEMPT_CAP} exceeded in one burst")
            stamp = t
            y = rng.exponential(1.0 / cfg.mu)
            t += y
            burst.append(y)
            if rng.random() >= cfg.eps:
                deliveries.append(t)
                stamps.append(stamp)
                break
        services.append(tuple(burst))
        attempts.append(len(burst))
    service_total = sum(sum(b) for b in services)
    return EpochTrace(
        scheme=Scheme.MAF_FEEDBACK,
        wait=wait,
        services=tuple(services),
        attempts=tuple(attempts),
        gamma=wait + service_total,
        service_total=service_total,
        deliveries=tuple(deliveries),
        stamps=tuple(stamps),
    )


def run_round_rr(
    rng: np.random.Generator,
    cfg: SystemConfig,
    tau: float,
    prev_round_service: float,
    start_time: float = 0.0,
) -> RoundTrace:
    """Simulate one blind transmission round: wait, then one sample per process."""
    if prev_round_service < 0:
        raise InvalidConfig("prev_round_service must be nonnegative")
    if tau < 0:
        raise InvalidConfig("tau must be nonnegative")
    wait = max(tau - prev_round_service, 0.0)
    t = start_time + wait
    services = []
    erased = []
    deliveries: list = []
    stamps: list = []
    for _ in range(cfg.k):
        stamp = t
        y = rng.exponential(1.0 / cfg.mu)
        t += y
        gone = rng.random() < cfg.eps
        services.append(y)
        erased.append(gone)
        deliveries.append(None if gone else t)
        stamps.append(None if gone else stamp)
    total = float(sum(services))
    return RoundTrace(
        wait=wait,
        services=tuple(services),
        erased=tuple(erased),
        round_total=total,
        length=wait + total,
        deliveries=tuple(deliveries),
        stamps=tuple(stamps),
    )


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    service_ss, erasure_ss, ou_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        np.random.default_rng(service_ss),
        np.random.default_rng(erasure_ss),
        np.random.default_rng(ou_ss),
    )


def _wait_fractions(cfg: SystemConfig, wait_split: Optional[Sequence[float]]) -> np.ndarray:
    if wait_split is None:
        f = np.zeros(cfg.k)
        f[0] = 1.0
        return f
    f = np.asarray(wait_split, dtype=float)
    if f.shape != (cfg.k,) or np.any(f < 0) or abs(f.sum() - 1.0) > 1e-9:
        raise InvalidConfig("wait_split must be k nonnegative fractions summing to 1")
    return f / f.sum()


@dataclass(frozen=True)
class MafEpochArrays:
    """Per-epoch aggregates of a feedback run (vectorized engine output)."""

    wait: np.ndarray          # (n,)
    service_total: np.ndarray  # (n,)
    attempts: np.ndarray      # (n, k) per-process attempt counts
    gamma: np.ndarray         # (n,) wait + service_total
    deliveries: np.ndarray    # (n, k) absolute delivery instants
    stamps: np.ndarray        # (n, k) delivered samples' generation instants


def maf_epoch_arrays(
    cfg: SystemConfig,
    tau: float,
    n_epochs: int,
    seed: int,
    wait_split: Optional[Sequence[float]] = None,
) -> MafEpochArrays:
    """Run ``n_epochs`` chained feedback epochs, vectorized across epochs.

    One extra unmeasured epoch is drawn first to initialize the wait's
    conditioning value; it is not part of the returned arrays.
    """
    if tau < 0:
        raise InvalidConfig("tau must be nonnegative")
    if n_epochs < 1:
        raise InvalidConfig("n_epochs must be >= 1")
    service_rng, erasure_rng, _ = _streams(seed)
    fracs = np.cumsum(_wait_fractions(cfg, wait_split))
    n = n_epochs + 1
    if cfg.eps > 0.0:
        attempts = erasure_rng.geometric(1.0 - cfg.eps, size=(n, cfg.k))
    else:
        attempts = np.ones((n, cfg.k), dtype=np.int64)
    if attempts.max() > ATTEMPT_CAP:
        raise ConvergenceError(f"attempt cap {ATTEMPT_CAP} exceeded in one burst")
    flat = attempts.ravel()
    services = service_rng.exponential(1.0 / cfg.mu, size=int(flat.sum()))
    ends = np.cumsum(flat)
    bursts = np.add.reduceat(services, ends - flat).reshape(n, cfg.k)
    y_last = services[ends - 1].reshape(n, cfg.k)
    totals = bursts.sum(axis=1)
    waits = np.empty(n)
    waits[0] = 0.0
    np.maximum(tau - totals[:-1], 0.0, out=waits[1:])
    starts = np.concatenate(([0.0], np.cumsum(waits + totals)[:-1]))
    # Delivery of process k: epoch start, the wait fractions released so far,
    # and the bursts of processes 1..k.
    deliveries = starts[:, None] + fracs[None, :] * waits[:, None] + np.cumsum(bursts, axis=1)
    stamps = deliveries - y_last
    return MafEpochArrays(
        wait=waits[1:],
        service_total=totals[1:],
        attempts=attempts[1:],
        gamma=(waits + totals)[1:],
        deliveries=deliveries[1:],
        stamps=stamps[1:],
    )


@dataclass(frozen=True)
class RrRoundArrays:
    """Per-round aggregates of a blind round-robin run."""

    wait: np.ndarray          # (r,)
    round_total: np.ndarray   # (r,)
    delivered: np.ndarray     # (r, k) bool, sample survived the channel
    service: np.ndarray       # (r, k)
    end_times: np.ndarray     # (r, k) service completion instants
    stamps: np.ndarray        # (r, k) sample generation instants


def rr_round_arrays(
    cfg: SystemConfig,
    tau: float,
    n_rounds: int,
    seed: int,
    wait_split: Optional[Sequence[float]] = None,
) -> RrRoundArrays:
    """Run ``n_rounds`` chained blind rounds, vectorized across rounds."""
    if tau < 0:
        raise InvalidConfig("tau must be nonnegative")
    if n_rounds < 1:
        raise InvalidConfig("n_rounds must be >= 1")
    service_rng, erasure_rng, _ = _streams(seed)
    fracs = np.cumsum(_wait_fractions(cfg, wait_split))
    r = n_rounds + 1
    services = service_rng.exponential(1.0 / cfg.mu, size=(r, cfg.k))
    delivered = erasure_rng.random(size=(r, cfg.k)) >= cfg.eps
    totals = services.sum(axis=1)
    waits = np.empty(r)
    waits[0] = 0.0
    np.maximum(tau - totals[:-1], 0.0, out=waits[1:])
    starts = np.concatenate(([0.0], np.cumsum(waits + totals)[:-1]))
    end_times = starts[:, None] + fracs[None, :] * waits[:, None] + np.cumsum(services, axis=1)
    stamps = end_times - services
    return RrRoundArrays(
        wait=waits[1:],
        round_total=totals[1:],
        delivered=delivered[1:],
        service=services[1:],
        end_times=end_times[1:],
        stamps=stamps[1:],
    )


def _batch_edges(count: int) -> np.ndarray:
    nb = min(BATCH_COUNT, count)
    return np.linspace(0, count, nb + 1).astype(np.int64)


def _ratio_batches(values: np.ndarray, spans: np.ndarray, edges: np.ndarray) -> np.ndarray:
    sums_v = np.add.reduceat(values, edges[:-1])
    sums_s = np.add.reduceat(spans, edges[:-1])
    return sums_v / sums_s


def _se(batch_vals: np.ndarray) -> float:
    if len(batch_vals) < 2:
        return float("nan")
    return float(np.std(batch_vals, ddof=1) / math.sqrt(len(batch_vals)))


def _ou_probe(
    deliveries: np.ndarray,
    stamps: np.ndarray,
    p,
    rng: np.random.Generator,
) -> Tuple[float, float, float, int]:
    """Co-simulate the true process along one delivery sequence.

    At each delivery, compares the realized squared estimation error of the
    previous sample's extrapolation against the closed-form error at that age.
    Returns (mean squared error, mean reference, stderr of paired diff, count).
    """
    n = len(deliveries)
    errs = np.empty(n - 1)
    refs = np.empty(n - 1)
    x = math.sqrt(p.stationary_variance) * rng.standard_normal()  # stationary start
    z = rng.standard_normal(size=2 * n)
    x_at_delivery = ou.ou_step(x, deliveries[0] - stamps[0], p, z[0])
    prev = SampleRecord(value=x, stamp=stamps[0])
    for i in range(1, n):
        # Gaps that are exactly zero in event order can round a hair negative
        # in the cumulative time arithmetic; clamp them.
        x_stamp = ou.ou_step(
            x_at_delivery, max(stamps[i] - deliveries[i - 1], 0.0), p, z[2 * i]
        )
        x_at_delivery = ou.ou_step(x_stamp, deliveries[i] - stamps[i], p, z[2 * i + 1])
        errs[i - 1] = (x_at_delivery - ou.mmse_estimate(prev, deliveries[i], p)) ** 2
        refs[i - 1] = ou.inst_mse(deliveries[i] - prev.stamp, p)
        prev = SampleRecord(value=x_stamp, stamp=stamps[i])
    diff = errs - refs
    return (
        float(errs.mean()),
        float(refs.mean()),
        float(diff.std(ddof=1) / math.sqrt(len(diff))),
        n - 1,
    )


def simulate(
    cfg: SystemConfig,
    policy: ThresholdPolicy,
    n_epochs: int,
    seed: int,
    burn_in: int = 1000,
    wait_split: Optional[Sequence[float]] = None,
    track_ou: bool = False,
    trace_path: Optional[str] = None,
) -> SimStats:
    """Run one full replication and return time-average statistics.

    ``n_epochs`` counts per-process delivery epochs including the ``burn_in``
    initial ones that are discarded; the statistics window covers the
    remaining ``n_epochs - burn_in - 1`` inter-delivery spans of each process.
    ``wait_split`` optionally spreads each wait across the k service slots in
    fixed fractions (default: all of it up front). Identical arguments give
    bit-identical results.
    """
    if not isinstance(policy, ThresholdPolicy) or policy.scheme not in Scheme:
        raise InvalidConfig("policy must be a ThresholdPolicy with a known scheme")
    if n_epochs < 1:
        raise InvalidConfig("n_epochs must be >= 1")
    if not (0 <= burn_in < n_epochs):
        raise InvalidConfig("burn_in must satisfy 0 <= burn_in < n_epochs")
    if n_epochs - burn_in < 2:
        raise InvalidConfig("need at least two post-burn-in epochs for statistics")

    if policy.scheme is Scheme.MAF_FEEDBACK:
        arrays = maf_epoch_arrays(cfg, policy.tau, n_epochs, seed, wait_split)
        deliveries = arrays.deliveries
        stamps = arrays.stamps
        samples_per_epoch = arrays.attempts
        epoch_index = np.arange(n_epochs)
    else:
        target = n_epochs
        margin = int(math.ceil(8.0 * math.sqrt(target * max(cfg.eps, 1e-12)))) + 64
        n_rounds = int(math.ceil((target + margin) / (1.0 - cfg.eps)))
        rounds = rr_round_arrays(cfg, policy.tau, n_rounds, seed, wait_split)
        deliveries = np.empty((target, cfg.k))
        stamps = np.empty((target, cfg.k))
        samples_per_epoch = np.empty((target, cfg.k), dtype=np.int64)
        for k in range(cfg.k):
            hits = np.flatnonzero(rounds.delivered[:, k])
            if len(hits) < target:
                raise ConvergenceError(
                    f"only {len(hits)} deliveries for process {k}, need {target}"
                )
            hits = hits[:target]
            deliveries[:, k] = rounds.end_times[hits, k]
            stamps[:, k] = rounds.stamps[hits, k]
            # one fresh sample of each process per round
            samples_per_epoch[0, k] = hits[0] + 1
            samples_per_epoch[1:, k] = np.diff(hits)
        arrays = rounds
        epoch_index = np.arange(target)

    lo = burn_in
    window = n_epochs - burn_in - 1
    edges = _batch_edges(window)
    nb = len(edges) - 1

    per_mse = []
    per_mse_se = []
    inter_sample = []
    sum_batches = np.zeros(nb)
    epoch_len_batches = np.zeros(nb)
    mean_epoch_len = 0.0
    ou_err = ou_ref = ou_se = None
    if track_ou:
        _, _, ou_rng = _streams(seed)
        errs, refs, variances = [], [], []

    for k in range(cfg.k):
        d = deliveries[lo:, k]
        s = stamps[lo:, k]
        ages0 = d - s
        gaps = np.diff(d)
        ints = ou.mse_integral(ages0[:-1], gaps, cfg.processes[k])
        span = d[-1] - d[0]
        per_mse.append(float(ints.sum() / span))
        batches_k = _ratio_batches(ints, gaps, edges)
        per_mse_se.append(_se(batches_k))
        sum_batches += batches_k
        epoch_len_batches += _ratio_batches(gaps, np.ones_like(gaps), edges) / cfg.k
        mean_epoch_len += float(gaps.mean()) / cfg.k
        n_samples = int(samples_per_epoch[lo + 1 :, k].sum())
        inter_sample.append(float(span / n_samples))
        if track_ou:
            e, r, se_d, cnt = _ou_probe(d, s, cfg.processes[k], ou_rng)
            errs.append(e)
            refs.append(r)
            variances.append(se_d**2)

    if track_ou:
        ou_err = float(np.sum(errs))
        ou_ref = float(np.sum(refs))
        ou_se = float(math.sqrt(sum(variances)))

    if trace_path is not None:
        _write_trace(trace_path, policy.scheme, cfg, arrays, epoch_index)

    return SimStats(
        scheme=policy.scheme,
        sum_mse=float(sum(per_mse)),
        sum_mse_se=_se(sum_batches),
        per_process_mse=tuple(per_mse),
        per_process_mse_se=tuple(per_mse_se),
        mean_epoch_len=mean_epoch_len,
        mean_epoch_len_se=_se(epoch_len_batches),
        per_process_inter_sample_mean=tuple(inter_sample),
        epochs=window,
        ou_probe_mse=ou_err,
        ou_probe_ref=ou_ref,
        ou_probe_diff_se=ou_se,
    )


def _write_trace(path: str, scheme: Scheme, cfg: SystemConfig, arrays, epoch_index) -> None:
    """Dump one delimited record per typical-process epoch."""
    cols = ["epoch_index", "scheme", "w_total", "service_total", "m_total", "gamma"]
    cols += [f"d_{k + 1}" for k in range(cfg.k)] + [f"stamp_{k + 1}" for k in range(cfg.k)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(cols) + "\n")
        if scheme is Scheme.MAF_FEEDBACK:
            for i in epoch_index:
                row = [
                    str(i),
                    scheme.value,
                    f"{arrays.wait[i]:.12g}",
                    f"{arrays.service_total[i]:.12g}",
                    str(int(arrays.attempts[i].sum())),
                    f"{arrays.gamma[i]:.12g}",
                ]
                row += [f"{arrays.deliveries[i, k]:.12g}" for k in range(cfg.k)]
                row += [f"{arrays.stamps[i, k]:.12g}" for k in range(cfg.k)]
                fh.write("\t".join(row) + "\n")
        else:
            # Epochs of the last process partition the round sequence.
            bounds = np.flatnonzero(arrays.delivered[:, cfg.k - 1])
            prev = 0
            for i, b in enumerate(bounds):
                rounds = slice(prev, b + 1)
                w_total = float(arrays.wait[rounds].sum())
                svc = float(arrays.round_total[rounds].sum())
                row = [
                    str(i),
                    scheme.value,
                    f"{w_total:.12g}",
                    f"{svc:.12g}",
                    str(b + 1 - prev),
                    f"{w_total + svc:.12g}",
                ]
                for k in range(cfg.k):
                    hits = np.flatnonzero(arrays.delivered[rounds, k]) + prev
                    row.append("" if len(hits) == 0 else f"{arrays.end_times[hits[-1], k]:.12g}")
                for k in range(cfg.k):
                    hits = np.flatnonzero(arrays.delivered[rounds, k]) + prev
                    row.append("" if len(hits) == 0 else f"{arrays.stamps[hits[-1], k]:.12g}")
                fh.write("\t".join(row) + "\n")
                prev = b + 1


def merge_sim_stats(parts: Sequence[SimStats]) -> SimStats:
    """Combine independent replications by epoch-weighted left fold.

    Deterministic for a given ordering; replications must share the scheme
    and process count.
    """
    if not parts:
        raise InvalidConfig("nothing to merge")
    if any(p.scheme is not parts[0].scheme for p in parts):
        raise InvalidConfig("cannot merge statistics across schemes")
    k = len(parts[0].per_process_mse)
    if any(len(p.per_process_mse) != k for p in parts):
        raise InvalidConfig("cannot merge statistics across process counts")
    total = sum(p.epochs for p in parts)

    def wmean(vals, ses) -> Tuple[float, float]:
        m = sum(v * p.epochs for v, p in zip(vals, parts)) / total
        var = sum((s * p.epochs) ** 2 for s, p in zip(ses, parts)) / total**2
        return m, math.sqrt(var)

    sum_mse, sum_mse_se = wmean([p.sum_mse for p in parts], [p.sum_mse_se for p in parts])
    mel, mel_se = wmean([p.mean_epoch_len for p in parts], [p.mean_epoch_len_se for p in parts])
    per = []
    per_se = []
    for i in range(k):
        v, s = wmean(
            [p.per_process_mse[i] for p in parts], [p.per_process_mse_se[i] for p in parts]
        )
        per.append(v)
        per_se.append(s)
    inter = tuple(
        sum(p.per_process_inter_sample_mean[i] * p.epochs for p in parts) / total
        for i in range(k)
    )
    return SimStats(
        scheme=parts[0].scheme,
        sum_mse=sum_mse,
        sum_mse_se=sum_mse_se,
        per_process_mse=tuple(per),
        per_process_mse_se=tuple(per_se),
        mean_epoch_len=mel,
        mean_epoch_len_se=mel_se,
        per_process_inter_sample_mean=inter,
        epochs=total,
    )
