"""Hot loops with a numba implementation and a pure-numpy fallback.

Set ``ERASURE_AOI_DISABLE_NUMBA=1`` (or run without numba installed) to use the
numpy path. Both paths are always importable as ``*_numba`` / ``*_numpy`` so
they can be compared directly; the unsuffixed names dispatch to the selected one.

Cap vectors reach the kernels as int64 arrays where ``0`` encodes an unbounded
cap.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("ERASURE_AOI_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKEND = "numba" if (HAVE_NUMBA and not _DISABLE) else "numpy"


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Slot-level channel walk
# ---------------------------------------------------------------------------


def _walk_py(erased, caps):
    """Run the drop-on-consecutive-erasures state machine over ``erased``.

    Returns ``(S, D, M, T, d, d_cycle, residual)``: per delivery the update
    duration S, the dropped time D and drop count M accumulated since the
    previous delivery and the delivery slot end T; per drop its duration d and
    the index of the delivery it precedes; and the slots of the unfinished
    attempt at the horizon.
    """
    n = erased.shape[0]
    k = caps.shape[0]
    s_out = np.empty(n // k + 1, dtype=np.int64)
    dd_out = np.empty(n // k + 1, dtype=np.int64)
    m_out = np.empty(n // k + 1, dtype=np.int64)
    t_out = np.empty(n // k + 1, dtype=np.int64)
    d_out = np.empty(n + 1, dtype=np.int64)
    dc_out = np.empty(n + 1, dtype=np.int64)
    pkt = 0
    consec = 0
    elapsed = 0
    dacc = 0
    macc = 0
    ns = 0
    nf = 0
    for t in range(n):
        elapsed += 1
        if erased[t]:
            consec += 1
            c = caps[pkt]
            if c > 0 and consec >= c:
                d_out[nf] = elapsed
                dc_out[nf] = ns
                nf += 1
                dacc += elapsed
                macc += 1
                elapsed = 0
                pkt = 0
                consec = 0
        else:
            consec = 0
            pkt += 1
            if pkt == k:
                s_out[ns] = elapsed
                dd_out[ns] = dacc
                m_out[ns] = macc
                t_out[ns] = t + 1
                ns += 1
                elapsed = 0
                pkt = 0
                dacc = 0
                macc = 0
    return (
        s_out[:ns].copy(),
        dd_out[:ns].copy(),
        m_out[:ns].copy(),
        t_out[:ns].copy(),
        d_out[:nf].copy(),
        dc_out[:nf].copy(),
        elapsed,
    )


walk_numba = _njit(_walk_py)


def erasure_run_lengths(erased: np.ndarray) -> np.ndarray:
    """Length of the erasure run starting at every slot (counting up to the horizon)."""
    n = erased.shape[0]
    idx = np.arange(n, dtype=np.int64)
    next_ok = np.where(erased, n, idx)
    next_ok = np.minimum.accumulate(next_ok[::-1])[::-1]
    return next_ok - idx


def walk_numpy(erased: np.ndarray, caps: np.ndarray):
    """Same contract as the numba walk, but jumps over whole erasure runs.

    Run lengths come from one vectorized pass, so the Python loop runs once per
    packet outcome instead of once per slot.
    """
    n = int(erased.shape[0])
    k = int(caps.shape[0])
    run = erasure_run_lengths(np.asarray(erased, dtype=bool)).tolist()
    cap_list = [int(c) if c > 0 else n + 1 for c in caps]
    s_out, dd_out, m_out, t_out, d_out, dc_out = [], [], [], [], [], []
    t = 0
    pkt = 0
    elapsed = 0
    dacc = 0
    macc = 0
    while t < n:
        c = cap_list[pkt]
        r = run[t]
        if r >= c:
            if t + c > n:
                break
            t += c
            d = elapsed + c
            d_out.append(d)
            dc_out.append(len(s_out))
            dacc += d
            macc += 1
            elapsed = 0
            pkt = 0
        else:
            if t + r + 1 > n:
                break
            t += r + 1
            elapsed += r + 1
            pkt += 1
            if pkt == k:
                s_out.append(elapsed)
                dd_out.append(dacc)
                m_out.append(macc)
                t_out.append(t)
                elapsed = 0
                pkt = 0
                dacc = 0
                macc = 0
    # slots consumed by the unfinished attempt, including a partial erasure run
    residual = elapsed + (n - t)
    as_arr = lambda xs: np.asarray(xs, dtype=np.int64)  # noqa: E731
    return (
        as_arr(s_out),
        as_arr(dd_out),
        as_arr(m_out),
        as_arr(t_out),
        as_arr(d_out),
        as_arr(dc_out),
        residual,
    )


# ---------------------------------------------------------------------------
# Batched moment evaluation for policy search
# ---------------------------------------------------------------------------


def _batch_moments_py(idx, mean_tab, var_tab, q_tab, cap_tab):
    """Seven moments for every row of ``idx`` (symbol indices into the tables).

    Columns of the result: p, E[S], E[S^2], E[d], E[d^2], E[D], E[D^2].
    """
    n, k = idx.shape
    out = np.empty((n, 7), dtype=np.float64)
    for r in range(n):
        e_s = 0.0
        var_s = 0.0
        surv = 1.0
        w0 = 0.0
        w1 = 0.0
        w2 = 0.0
        for j in range(k):
            s = idx[r, j]
            q = q_tab[s]
            if q > 0.0:
                w = surv * q
                mu = cap_tab[s] + e_s
                w0 += w
                w1 += w * mu
                w2 += w * (mu * mu + var_s)
            surv *= 1.0 - q
            e_s += mean_tab[s]
            var_s += var_tab[s]
        p = surv
        out[r, 0] = p
        out[r, 1] = e_s
        out[r, 2] = var_s + e_s * e_s
        if w0 > 0.0:
            out[r, 3] = w1 / w0
            out[r, 4] = w2 / w0
        else:
            out[r, 3] = 0.0
            out[r, 4] = 0.0
        e_dd = w1 / p
        out[r, 5] = e_dd
        out[r, 6] = w2 / p + 2.0 * e_dd * e_dd
    return out


batch_moments_numba = _njit(_batch_moments_py)


def batch_moments_numpy(idx, mean_tab, var_tab, q_tab, cap_tab):
    idx = np.asarray(idx)
    m = mean_tab[idx]
    v = var_tab[idx]
    q = q_tab[idx]
    c = cap_tab[idx]
    n, k = idx.shape
    cm = np.cumsum(m, axis=1)
    cv = np.cumsum(v, axis=1)
    e_s = cm[:, -1]
    var_s = cv[:, -1]
    pre_m = cm - m
    pre_v = cv - v
    surv = np.cumprod(1.0 - q, axis=1)
    p = surv[:, -1]
    surv_before = np.ones_like(surv)
    surv_before[:, 1:] = surv[:, :-1]
    w = surv_before * q
    mu = c + pre_m
    w0 = w.sum(axis=1)
    w1 = (w * mu).sum(axis=1)
    w2 = (w * (mu * mu + pre_v)).sum(axis=1)
    out = np.empty((n, 7), dtype=np.float64)
    out[:, 0] = p
    out[:, 1] = e_s
    out[:, 2] = var_s + e_s * e_s
    has_fail = w0 > 0.0
    safe = np.where(has_fail, w0, 1.0)
    out[:, 3] = np.where(has_fail, w1 / safe, 0.0)
    out[:, 4] = np.where(has_fail, w2 / safe, 0.0)
    e_dd = w1 / p
    out[:, 5] = e_dd
    out[:, 6] = w2 / p + 2.0 * e_dd * e_dd
    return out


if BACKEND == "numba":
    walk = walk_numba
    batch_moments = batch_moments_numba
else:
    walk = walk_numpy
    batch_moments = batch_moments_numpy
