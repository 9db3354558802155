"""Exact moments of the delivered/dropped update durations and the AoI formulas.

The engine factorizes over packets: given that an update is delivered, the
attempt counts of its packets are independent truncated geometric variables,
so every moment needs O(K) work. :func:`brute_force_moments` evaluates the
same quantities as literal nested sums and exists only as a test oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from erasure_aoi.policy import (
    UNBOUNDED,
    AoiResult,
    Cap,
    ErasureChannel,
    Policy,
    UpdateMoments,
)

# Caps up to this size are summed term by term; larger ones use the closed form.
DIRECT_SUM_MAX_CAP = 64
# eps**c below this is treated as exactly zero (the cap then acts as unbounded).
POW_FLOOR = 1e-300
BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class PacketAttemptMoments:
    """Transmissions of one packet, conditioned on success within its cap."""

    success_within_cap: float
    mean_attempts: float
    second_moment_attempts: float

    @property
    def variance(self) -> float:
        return max(self.second_moment_attempts - self.mean_attempts**2, 0.0)


def erasure_pow(eps: float, cap: Cap) -> float:
    """``eps**cap`` with underflow flushed to zero and ``eps**UNBOUNDED == 0``."""
    if cap is UNBOUNDED or eps == 0.0:
        return 0.0
    if cap <= 64:
        q = eps**cap
    else:
        q = math.exp(cap * math.log(eps))
    return 0.0 if q < POW_FLOOR else q


def _geometric(eps: float) -> PacketAttemptMoments:
    return PacketAttemptMoments(1.0, 1.0 / (1.0 - eps), (1.0 + eps) / (1.0 - eps) ** 2)


def truncated_geometric_closed_form(cap: int, eps: float) -> tuple[float, float]:
    """Conditional (mean, second moment) of attempts given success within ``cap``."""
    q = erasure_pow(eps, cap)
    if q == 0.0:
        g = _geometric(eps)
        return g.mean_attempts, g.second_moment_attempts
    one = 1.0 - eps
    mean = 1.0 / one - cap * q / (1.0 - q)
    second = (1.0 + eps) / one**2 - q * cap * (cap * one + 2.0) / (one * (1.0 - q))
    return mean, second


def truncated_geometric_direct(cap: int, eps: float) -> tuple[float, float]:
    """Same quantities by summing ``t * eps**(t-1)`` over ``t = 1..cap``."""
    w = [eps**t for t in range(cap)]
    total = math.fsum(w)
    mean = math.fsum((t + 1) * wt for t, wt in enumerate(w)) / total
    second = math.fsum((t + 1) ** 2 * wt for t, wt in enumerate(w)) / total
    return mean, second


def packet_attempt_moments(cap: Cap, channel: ErasureChannel) -> PacketAttemptMoments:
    eps = channel.epsilon
    q = erasure_pow(eps, cap)
    if q == 0.0:
        return _geometric(eps)
    if cap <= DIRECT_SUM_MAX_CAP:
        mean, second = truncated_geometric_direct(cap, eps)
    else:
        mean, second = truncated_geometric_closed_form(cap, eps)
    return PacketAttemptMoments(1.0 - q, mean, second)


def success_prob(policy: Policy, channel: ErasureChannel) -> float:
    return math.prod(1.0 - erasure_pow(channel.epsilon, c) for c in policy.caps)


def success_time_moments(policy: Policy, channel: ErasureChannel) -> tuple[float, float]:
    packets = [packet_attempt_moments(c, channel) for c in policy.caps]
    e_s = math.fsum(pm.mean_attempts for pm in packets)
    var = math.fsum(pm.variance for pm in packets)
    return e_s, var + e_s * e_s


def _failure_sums(policy: Policy, channel: ErasureChannel) -> tuple[float, float, float]:
    """Mass, first and second moment sums over the drop point of a failed update.

    A drop at packet j has probability ``prod_{h<j}(1 - eps^c_h) * eps^c_j`` and
    lasts ``c_j`` slots plus the (conditionally independent) attempts spent on
    packets ``1..j-1``.
    """
    eps = channel.epsilon
    w0 = w1 = w2 = 0.0
    surv = 1.0
    pre_mean = 0.0
    pre_var = 0.0
    for cap in policy.caps:
        q = erasure_pow(eps, cap)
        pm = packet_attempt_moments(cap, channel)
        if q > 0.0:
            w = surv * q
            mu = cap + pre_mean
            w0 += w
            w1 += w * mu
            w2 += w * (mu * mu + pre_var)
        surv *= 1.0 - q
        pre_mean += pm.mean_attempts
        pre_var += pm.variance
    return w0, w1, w2


def failed_update_moments(policy: Policy, channel: ErasureChannel) -> tuple[float, float]:
    """(E[d], E[d^2]) of one dropped update; (0, 0) when no packet can be dropped."""
    w0, w1, w2 = _failure_sums(policy, channel)
    if w0 == 0.0:
        return 0.0, 0.0
    return w1 / w0, w2 / w0


def aggregate_failure_moments(
    p: float, e_d: float, e_d2: float, fail_mass: float | None = None
) -> tuple[float, float]:
    """Moments of the dropped time between deliveries (geometric number of drops).

    ``fail_mass`` is ``1 - p`` computed without cancellation, when available.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability must lie in (0, 1], got {p}")
    if p == 1.0 or fail_mass == 0.0:
        return 0.0, 0.0
    ratio = (1.0 - p if fail_mass is None else fail_mass) / p
    e_D = ratio * e_d
    return e_D, ratio * e_d2 + 2.0 * e_D * e_D


def update_moments(policy: Policy, channel: ErasureChannel) -> UpdateMoments:
    k = policy.k
    if channel.epsilon == 0.0:
        return UpdateMoments(1.0, float(k), float(k * k), 0.0, 0.0, 0.0, 0.0)
    p = success_prob(policy, channel)
    e_s, e_s2 = success_time_moments(policy, channel)
    w0, w1, w2 = _failure_sums(policy, channel)
    e_d, e_d2 = (w1 / w0, w2 / w0) if w0 > 0.0 else (0.0, 0.0)
    e_D, e_D2 = aggregate_failure_moments(p, e_d, e_d2, fail_mass=w0)
    return UpdateMoments(p, e_s, e_s2, e_d, e_d2, e_D, e_D2)


def average_aoi(m: UpdateMoments) -> float:
    return m.e_s + (0.5 * m.e_s2 + 0.5 * m.e_D2 + m.e_s * m.e_D) / (m.e_s + m.e_D)


def peak_aoi(m: UpdateMoments) -> float:
    return 2.0 * m.e_s + m.e_D


def evaluate(policy: Policy, channel: ErasureChannel) -> AoiResult:
    m = update_moments(policy, channel)
    return AoiResult(average_aoi(m), peak_aoi(m))


# ---------------------------------------------------------------------------
# Independent routes used for cross-checking
# ---------------------------------------------------------------------------


def brute_force_moments(
    policy: Policy,
    channel: ErasureChannel,
    tail_cutoff: int = 200,
    *,
    limit: int = BRUTE_FORCE_LIMIT,
) -> UpdateMoments:
    """Moments by direct enumeration of every erasure pattern.

    Delivered updates: all ``(i_1..i_K)`` with ``i_j < c_j`` erasures per packet.
    Dropped updates: every drop point j with all ``(i_1..i_{j-1})`` before it.
    An unbounded cap is enumerated up to ``tail_cutoff`` erasures; the neglected
    probability mass is at most ``K * eps**tail_cutoff``.
    """
    eps = channel.epsilon
    k = policy.k
    ranges = [tail_cutoff if c is UNBOUNDED else c for c in policy.caps]
    size = math.prod(ranges)
    if size > limit:
        raise ValueError(f"brute force needs {size} terms (limit {limit})")

    one_k = (1.0 - eps) ** k
    p_terms, s_terms, s2_terms = [], [], []
    for combo in itertools.product(*(range(r) for r in ranges)):
        n_err = sum(combo)
        weight = eps**n_err
        dur = n_err + k
        p_terms.append(weight)
        s_terms.append(dur * weight)
        s2_terms.append(dur * dur * weight)
    p = one_k * math.fsum(p_terms)
    e_s = one_k * math.fsum(s_terms) / p
    e_s2 = one_k * math.fsum(s2_terms) / p

    f0, f1, f2 = [], [], []
    for j, cap in enumerate(policy.caps):
        if cap is UNBOUNDED or eps == 0.0:
            continue
        lead = (1.0 - eps) ** j * eps**cap
        for combo in itertools.product(*(range(r) for r in ranges[:j])):
            n_err = sum(combo)
            weight = lead * eps**n_err
            dur = j + cap + n_err
            f0.append(weight)
            f1.append(dur * weight)
            f2.append(dur * dur * weight)
    fail_mass = math.fsum(f0)
    if fail_mass == 0.0:
        e_d = e_d2 = 0.0
    else:
        e_d = math.fsum(f1) / fail_mass
        e_d2 = math.fsum(f2) / fail_mass
    e_D = fail_mass / p * e_d
    e_D2 = fail_mass / p * e_d2 + 2.0 * e_D * e_D
    return UpdateMoments(p, e_s, e_s2, e_d, e_d2, e_D, e_D2)


def prefix_moment_recursion(
    policy: Policy, channel: ErasureChannel
) -> tuple[list[float], list[float]]:
    """E[S(i)] and E[D(i)] for every prefix policy ``[c_1..c_i]``, built one packet at a time."""
    eps = channel.epsilon
    e_s, e_d = 0.0, 0.0
    s_seq, d_seq = [], []
    for cap in policy.caps:
        q = erasure_pow(eps, cap)
        tail = 0.0 if q == 0.0 else cap * q / (1.0 - q)
        c_term = 0.0 if q == 0.0 else cap
        new_s = e_s + 1.0 + eps / (1.0 - eps) - tail
        new_d = (e_d + q * (c_term + e_s)) / (1.0 - q)
        e_s, e_d = new_s, new_d
        s_seq.append(e_s)
        d_seq.append(e_d)
    return s_seq, d_seq


def cumulative_time_recursion(policy: Policy, channel: ErasureChannel) -> list[float]:
    """``X_j = E[S(j)] + E[D(j)]`` for every prefix, from the X-only recursion."""
    eps = channel.epsilon
    ratios = []
    for cap in policy.caps:
        q = erasure_pow(eps, cap)
        ratios.append(q / (1.0 - q))
    xs: list[float] = []
    for j in range(1, policy.k + 1):
        acc = [j / (1.0 - eps)]
        acc.extend(ratios[i] * xs[i - 1] for i in range(1, j))
        xs.append(math.fsum(acc))
    return xs


def moments_for_caps(caps: Sequence[Cap], epsilon: float) -> UpdateMoments:
    """Shorthand for scripts: ``update_moments(Policy(caps), ErasureChannel(eps))``."""
    return update_moments(Policy(tuple(caps)), ErasureChannel(epsilon))
