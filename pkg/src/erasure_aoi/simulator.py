"""Slot-level Monte Carlo of the source -> erasure channel -> monitor loop.

Timing convention: an update whose first packet is sent in slot ``t`` (covering
``[t, t+1)``) is generated at time ``t``; a packet is delivered at the end of its
slot. The age right after a delivery therefore equals the update's duration S,
and between deliveries it grows linearly, so each inter-delivery cycle adds a
trapezoid of area ``S_prev * L + L**2 / 2`` with ``L = D + S``.

The first delivery only fixes the starting age, so its cycle is never counted.
Cycles starting before ``warmup`` and the unfinished cycle at the horizon are
discarded as well.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from erasure_aoi import _kernels
from erasure_aoi.policy import UNBOUNDED, ErasureChannel, Policy, UpdateMoments

Z95 = 1.959963984540054
_CHUNK = 1 << 20


class SimulationError(RuntimeError):
    """The run produced too few deliveries to estimate anything."""


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 10**6
    seed: int = 0
    replications: int = 20
    warmup: int = 0
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.warmup < 0 or self.horizon <= self.warmup:
            raise ValueError("need horizon > warmup >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimStats:
    avg_aoi_mean: float
    avg_aoi_ci_halfwidth: float
    paoi_mean: float
    paoi_ci_halfwidth: float
    n_successes: int
    n_terminations: int
    emp_e_s: float
    emp_e_D: float
    replications: int


@dataclass(frozen=True)
class Estimate:
    mean: float
    ci_halfwidth: float


@dataclass(frozen=True)
class EmpiricalMoments:
    """Sample counterparts of :class:`UpdateMoments` with 95% CIs across replications."""

    p: Estimate
    e_s: Estimate
    e_s2: Estimate
    e_d: Estimate
    e_d2: Estimate
    e_D: Estimate
    e_D2: Estimate
    n_failed_updates: int
    # correlation of S and D within the same cycle, pooled over all replications
    s_d_correlation: float
    s_d_correlation_se: float

    def point(self) -> UpdateMoments:
        return UpdateMoments(
            self.p.mean, self.e_s.mean, self.e_s2.mean, self.e_d.mean,
            self.e_d2.mean, self.e_D.mean, self.e_D2.mean,
        )


@dataclass
class RunTrace:
    """Raw output of one replication's channel walk."""

    S: np.ndarray
    D: np.ndarray
    M: np.ndarray
    T: np.ndarray
    d: np.ndarray
    d_cycle: np.ndarray
    residual: int
    horizon: int

    def counted(self, warmup: int) -> np.ndarray:
        """Indices of deliveries whose cycle is counted in the statistics."""
        if self.S.size < 2:
            return np.empty(0, dtype=np.int64)
        idx = np.arange(1, self.S.size)
        return idx[self.T[:-1] >= warmup]


def default_threads() -> int:
    env = os.environ.get("ERASURE_AOI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def caps_array(policy: Policy) -> np.ndarray:
    return np.array([0 if c is UNBOUNDED else c for c in policy.caps], dtype=np.int64)


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Independent counter-based stream for ``(seed, replication)``."""
    ss = np.random.SeedSequence(seed, spawn_key=(replication,))
    return np.random.Generator(np.random.Philox(ss))


def erasure_pattern(eps: float, horizon: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(horizon, dtype=np.bool_)
    if eps == 0.0:
        out[:] = False
        return out
    for start in range(0, horizon, _CHUNK):
        stop = min(start + _CHUNK, horizon)
        out[start:stop] = rng.random(stop - start) < eps
    return out


def run_replication(
    policy: Policy,
    channel: ErasureChannel,
    horizon: int,
    seed: int,
    replication: int,
    *,
    walker=None,
) -> RunTrace:
    erased = erasure_pattern(channel.epsilon, horizon, replication_rng(seed, replication))
    walker = walker or _kernels.walk
    S, D, M, T, d, d_cycle, residual = walker(erased, caps_array(policy))
    return RunTrace(S, D, M, T, d, d_cycle, int(residual), horizon)


def _traces(policy: Policy, channel: ErasureChannel, config: SimConfig) -> list[RunTrace]:
    threads = config.threads or default_threads()

    def one(r: int) -> RunTrace:
        return run_replication(policy, channel, config.horizon, config.seed, r)

    reps = range(config.replications)
    if threads <= 1 or config.replications == 1:
        traces = [one(r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(one, reps))
    for r, tr in enumerate(traces):
        if tr.counted(config.warmup).size == 0:
            raise SimulationError(
                f"replication {r}: fewer than two deliveries after warmup "
                f"({tr.S.size} deliveries in {config.horizon} slots at eps={channel.epsilon})"
            )
    return traces


def _mean_ci(values: list[float]) -> Estimate:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        return Estimate(float(arr.mean()), math.nan)
    half = Z95 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return Estimate(float(arr.mean()), half)


def _cycle_stats(tr: RunTrace, warmup: int) -> tuple[float, float]:
    idx = tr.counted(warmup)
    s_prev = tr.S[idx - 1].astype(np.float64)
    length = (tr.D[idx] + tr.S[idx]).astype(np.float64)
    area = s_prev * length + 0.5 * length * length
    avg = math.fsum(area) / math.fsum(length)
    peak = float(np.mean(s_prev + length))
    return avg, peak


def simulate(policy: Policy, channel: ErasureChannel, config: SimConfig | None = None) -> SimStats:
    """Empirical average and peak AoI over independent seeded replications."""
    config = config or SimConfig()
    traces = _traces(policy, channel, config)
    avgs, peaks = [], []
    n_succ = n_term = 0
    s_sum = d_sum = 0.0
    for tr in traces:
        a, pk = _cycle_stats(tr, config.warmup)
        avgs.append(a)
        peaks.append(pk)
        idx = tr.counted(config.warmup)
        n_succ += idx.size
        n_term += int(tr.M[idx].sum())
        s_sum += float(tr.S[idx].sum())
        d_sum += float(tr.D[idx].sum())
    avg = _mean_ci(avgs)
    peak = _mean_ci(peaks)
    return SimStats(
        avg_aoi_mean=avg.mean,
        avg_aoi_ci_halfwidth=avg.ci_halfwidth,
        paoi_mean=peak.mean,
        paoi_ci_halfwidth=peak.ci_halfwidth,
        n_successes=n_succ,
        n_terminations=n_term,
        emp_e_s=s_sum / n_succ,
        emp_e_D=d_sum / n_succ,
        replications=config.replications,
    )


def empirical_moments(
    policy: Policy, channel: ErasureChannel, config: SimConfig | None = None
) -> EmpiricalMoments:
    """Sample estimates of the seven update moments from counted cycles."""
    config = config or SimConfig()
    traces = _traces(policy, channel, config)
    cols: dict[str, list[float]] = {k: [] for k in ("p", "e_s", "e_s2", "e_d", "e_d2", "e_D", "e_D2")}
    all_s, all_D = [], []
    n_failed = 0
    for tr in traces:
        idx = tr.counted(config.warmup)
        s = tr.S[idx].astype(np.float64)
        big_d = tr.D[idx].astype(np.float64)
        d_mask = np.isin(tr.d_cycle, idx)
        d = tr.d[d_mask].astype(np.float64)
        n_failed += d.size
        cols["p"].append(s.size / (s.size + d.size))
        cols["e_s"].append(float(s.mean()))
        cols["e_s2"].append(float(np.mean(s * s)))
        cols["e_d"].append(float(d.mean()) if d.size else 0.0)
        cols["e_d2"].append(float(np.mean(d * d)) if d.size else 0.0)
        cols["e_D"].append(float(big_d.mean()))
        cols["e_D2"].append(float(np.mean(big_d * big_d)))
        all_s.append(s)
        all_D.append(big_d)
    s_all = np.concatenate(all_s)
    d_all = np.concatenate(all_D)
    if s_all.std() > 0.0 and d_all.std() > 0.0:
        corr = float(np.corrcoef(s_all, d_all)[0, 1])
    else:
        corr = 0.0
    se = 1.0 / math.sqrt(max(s_all.size - 3, 1))
    return EmpiricalMoments(
        **{k: _mean_ci(v) for k, v in cols.items()},
        n_failed_updates=n_failed,
        s_d_correlation=corr,
        s_d_correlation_se=se,
    )
