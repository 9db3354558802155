"""Reference computations that share no code with the package."""

from __future__ import annotations

import math

INF = None  # unbounded cap in oracle inputs


def update_outcomes(caps, eps, max_len):
    """Every slot-by-slot path of one update attempt, up to ``max_len`` slots.

    Returns ``(delivered, dropped, lost)``: lists of (duration, probability) for
    delivered and dropped attempts, and the probability mass still undecided
    after ``max_len`` slots.
    """
    k = len(caps)
    delivered, dropped = [], []
    lost = 0.0
    stack = [(0, 0, 0, 1.0)]  # packet index, consecutive erasures, elapsed, prob
    while stack:
        pkt, consec, elapsed, prob = stack.pop()
        if elapsed == max_len:
            lost += prob
            continue
        # packet gets through
        if pkt + 1 == k:
            delivered.append((elapsed + 1, prob * (1 - eps)))
        else:
            stack.append((pkt + 1, 0, elapsed + 1, prob * (1 - eps)))
        # packet erased
        if eps > 0:
            cap = caps[pkt]
            if cap is not INF and consec + 1 == cap:
                dropped.append((elapsed + 1, prob * eps))
            else:
                stack.append((pkt, consec + 1, elapsed + 1, prob * eps))
    return delivered, dropped, lost


def outcome_moments(caps, eps, max_len=60):
    delivered, dropped, lost = update_outcomes(caps, eps, max_len)
    p = math.fsum(w for _, w in delivered)
    e_s = math.fsum(s * w for s, w in delivered) / p
    e_s2 = math.fsum(s * s * w for s, w in delivered) / p
    q = math.fsum(w for _, w in dropped)
    if q > 0:
        e_d = math.fsum(d * w for d, w in dropped) / q
        e_d2 = math.fsum(d * d * w for d, w in dropped) / q
    else:
        e_d = e_d2 = 0.0
    return dict(p=p, e_s=e_s, e_s2=e_s2, e_d=e_d, e_d2=e_d2, lost=lost)


def geometric_sum_moments(p, e_d, e_d2, terms=20000):
    """Moments of D = d_1 + ... + d_M, M ~ Geometric(p) on {0,1,...}, by summing over M."""
    m1 = m2 = 0.0
    first = []
    second = []
    for m in range(terms):
        pm = (1 - p) ** m * p
        if pm == 0.0:
            break
        # E[D | M=m] and E[D^2 | M=m] for i.i.d. d's
        cond1 = m * e_d
        cond2 = m * e_d2 + m * (m - 1) * e_d * e_d
        first.append(pm * cond1)
        second.append(pm * cond2)
    m1 = math.fsum(first)
    m2 = math.fsum(second)
    return m1, m2


def geometric_tail_moments(eps, terms=4000):
    """Mean and second moment of attempts until first success (numeric tail sum)."""
    probs = [(1 - eps) * eps ** (t - 1) for t in range(1, terms + 1)]
    return (
        math.fsum(t * w for t, w in zip(range(1, terms + 1), probs)),
        math.fsum(t * t * w for t, w in zip(range(1, terms + 1), probs)),
    )
