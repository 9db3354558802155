"""Exhaustive search for cap vectors minimizing average or peak AoI.

Candidates are enumerated in lexicographic order (UNBOUNDED after every finite
cap) and scored in batches by the moment kernel; the final minimum and tie set
are determined after the full scan, so the answer does not depend on batching.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from erasure_aoi import _kernels
from erasure_aoi.analytic import average_aoi, erasure_pow, packet_attempt_moments, peak_aoi, update_moments
from erasure_aoi.closed_forms import paoi_cap_lower_bounds
from erasure_aoi.policy import UNBOUNDED, Cap, ErasureChannel, Policy

DEFAULT_LIMIT = 10**8
TIE_ATOL = 1e-12
_BATCH = 1 << 16
_KEEP_CAP = 1 << 20


class Objective(enum.Enum):
    AVERAGE_AOI = "aoi"
    PAOI = "paoi"


class SearchSpaceTooLarge(ValueError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"search space has {size:.3e} candidates (limit {limit:.3e})")
        self.size = size
        self.limit = limit


@dataclass(frozen=True)
class SearchSpace:
    """Finite cap vectors to search.

    ``min_caps``/``max_caps`` optionally narrow each coordinate; a bound above
    ``cap_max`` leaves only UNBOUNDED for that coordinate. ``monotone_only``
    defaults to True for PAoI (a proven property of its optimum) and False for
    average AoI.
    """

    objective: Objective = Objective.AVERAGE_AOI
    cap_max: int = 12
    include_unbounded: bool = True
    monotone_only: bool | None = None
    min_caps: tuple[int, ...] | None = None
    max_caps: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.cap_max < 1:
            raise ValueError("cap_max must be >= 1")
        if self.monotone_only is None:
            object.__setattr__(self, "monotone_only", self.objective is Objective.PAOI)

    def symbols(self) -> list[Cap]:
        syms: list[Cap] = list(range(1, self.cap_max + 1))
        if self.include_unbounded:
            syms.append(UNBOUNDED)
        return syms

    def coordinate_ranges(self, k: int) -> list[tuple[int, int]]:
        """Inclusive symbol-index range per coordinate; ``lo > hi`` means empty."""
        n_fin = self.cap_max
        top = n_fin if self.include_unbounded else n_fin - 1
        out = []
        for i in range(k):
            lo_cap = self.min_caps[i] if self.min_caps else 1
            hi_cap = self.max_caps[i] if self.max_caps else None
            lo = min(lo_cap, n_fin + 1) - 1
            hi = top if hi_cap is None else min(hi_cap - 1, n_fin - 1)
            out.append((lo, hi))
        return out

    def size(self, k: int) -> int:
        """Candidates enumerated before the monotone filter."""
        return math.prod(max(hi - lo + 1, 0) for lo, hi in self.coordinate_ranges(k))

    def contains(self, policy: Policy) -> bool:
        syms = self.symbols()
        ranges = self.coordinate_ranges(policy.k)
        pos = []
        for c, (lo, hi) in zip(policy.caps, ranges):
            if c not in syms:
                return False
            i = syms.index(c)
            if not lo <= i <= hi:
                return False
            pos.append(i)
        if self.monotone_only and any(a > b for a, b in zip(pos, pos[1:])):
            return False
        return True


@dataclass
class OptResult:
    best_policy: Policy
    best_value: float
    evaluated: int
    pruned: int
    ties: list[Policy] = field(default_factory=list)
    n_ties: int = 0
    # best policy uses the largest finite cap; widening cap_max may help
    touches_cap_max: bool = False


def symbol_tables(symbols: Sequence[Cap], channel: ErasureChannel):
    """Per-symbol mean/variance of attempts, eps**c and cap value for the kernel."""
    mean, var, q, cap = [], [], [], []
    for s in symbols:
        pm = packet_attempt_moments(s, channel)
        mean.append(pm.mean_attempts)
        var.append(pm.variance)
        q.append(erasure_pow(channel.epsilon, s))
        cap.append(0.0 if s is UNBOUNDED else float(s))
    as_f = lambda xs: np.asarray(xs, dtype=np.float64)  # noqa: E731
    return as_f(mean), as_f(var), as_f(q), as_f(cap)


def objective_values(moments: np.ndarray, objective: Objective) -> np.ndarray:
    p, e_s, e_s2, _, _, e_D, e_D2 = moments.T
    if objective is Objective.PAOI:
        return 2.0 * e_s + e_D
    return e_s + (0.5 * e_s2 + 0.5 * e_D2 + e_s * e_D) / (e_s + e_D)


def _candidate_batches(ranges: list[tuple[int, int]], monotone: bool, batch: int):
    """Yield int64 index arrays of candidates in lexicographic order."""
    sizes = np.array([hi - lo + 1 for lo, hi in ranges], dtype=np.int64)
    los = np.array([lo for lo, _ in ranges], dtype=np.int64)
    total = int(np.prod(sizes)) if sizes.size else 0
    if total <= 0 or (sizes <= 0).any():
        return
    strides = np.ones_like(sizes)
    for i in range(len(sizes) - 2, -1, -1):
        strides[i] = strides[i + 1] * sizes[i + 1]
    for start in range(0, total, batch):
        flat = np.arange(start, min(start + batch, total), dtype=np.int64)
        idx = (flat[:, None] // strides[None, :]) % sizes[None, :] + los[None, :]
        if monotone and idx.shape[1] > 1:
            idx = idx[np.all(np.diff(idx, axis=1) >= 0, axis=1)]
        if idx.shape[0]:
            yield idx


def _objective(policy: Policy, channel: ErasureChannel, objective: Objective) -> float:
    m = update_moments(policy, channel)
    return peak_aoi(m) if objective is Objective.PAOI else average_aoi(m)


def optimize(
    k: int,
    channel: ErasureChannel,
    space: SearchSpace | None = None,
    *,
    limit: int = DEFAULT_LIMIT,
    max_ties: int = 256,
    batch: int = _BATCH,
) -> OptResult:
    """Exact minimizer of the objective over ``space``.

    Ties are candidates within ``TIE_ATOL`` of the minimum; the lexicographically
    smallest of them is returned as ``best_policy``.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    space = space or SearchSpace()
    size = space.size(k)
    if size > limit:
        raise SearchSpaceTooLarge(size, limit)
    syms = space.symbols()
    tables = symbol_tables(syms, channel)
    ranges = space.coordinate_ranges(k)
    base_size = len(syms) ** k

    monotone = bool(space.monotone_only)

    def scored():
        for idx in _candidate_batches(ranges, monotone, batch):
            yield idx, objective_values(_kernels.batch_moments(idx, *tables), space.objective)

    best = math.inf
    # candidates within tolerance of the running minimum, in enumeration order
    keep_vals: list[np.ndarray] = []
    keep_idx: list[np.ndarray] = []
    kept = 0
    overflow = False
    evaluated = 0
    for idx, vals in scored():
        evaluated += idx.shape[0]
        bmin = float(vals.min())
        if bmin < best:
            best = bmin
            masks = [v <= best + TIE_ATOL for v in keep_vals]
            keep_vals = [v[m] for v, m in zip(keep_vals, masks)]
            keep_idx = [i[m] for i, m in zip(keep_idx, masks)]
            kept = sum(v.size for v in keep_vals)
        sel = vals <= best + TIE_ATOL
        if sel.any() and not overflow:
            keep_vals.append(vals[sel])
            keep_idx.append(idx[sel])
            kept += int(sel.sum())
            overflow = kept > _KEEP_CAP
    if evaluated == 0:
        raise ValueError("search space is empty")

    if overflow:
        # too many near-ties to hold; rescan knowing the final minimum
        n_ties = 0
        tie_rows: list[np.ndarray] = []
        for idx, vals in scored():
            sel = vals <= best + TIE_ATOL
            n_ties += int(sel.sum())
            if sum(r.shape[0] for r in tie_rows) < max_ties:
                tie_rows.append(idx[sel])
        tie_idx = np.concatenate(tie_rows)
    else:
        all_vals = np.concatenate(keep_vals)
        tie_idx = np.concatenate(keep_idx)[all_vals <= best + TIE_ATOL]
        n_ties = int(tie_idx.shape[0])
    ties = [Policy(tuple(syms[j] for j in row)) for row in tie_idx[:max_ties]]
    best_policy = ties[0]
    return OptResult(
        best_policy=best_policy,
        best_value=_objective(best_policy, channel, space.objective),
        evaluated=evaluated,
        pruned=base_size - evaluated,
        ties=ties,
        n_ties=n_ties,
        touches_cap_max=any(c == space.cap_max for c in best_policy.caps),
    )


def prune_bound_paoi(k: int, channel: ErasureChannel, space: SearchSpace | None = None) -> SearchSpace:
    """Narrow a PAoI search to ``c_1 = 1``, the per-packet cap lower bounds and nondecreasing caps.

    A bound above ``cap_max`` is clamped to ``cap_max``: raising a cap toward
    the bound only lowers PAoI, so the restricted optimum still satisfies the
    clamped bound.
    """
    space = space or SearchSpace(objective=Objective.PAOI)
    if space.objective is not Objective.PAOI:
        raise ValueError("PAoI pruning applies only to the PAOI objective")
    bounds = paoi_cap_lower_bounds(k, channel)
    lower = tuple(max(min(b, space.cap_max), space.min_caps[i] if space.min_caps else 1)
                  for i, b in enumerate(bounds))
    upper = [None] * k if space.max_caps is None else list(space.max_caps)
    upper[0] = 1
    return replace(space, monotone_only=True, min_caps=lower, max_caps=tuple(upper))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


class _Auto:
    def __repr__(self) -> str:
        return "AUTO"


AUTO = _Auto()

PolicySpec = Union[Policy, Callable[[ErasureChannel], Policy], _Auto]


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    policy_id: str
    policy: Policy
    value: float


def sweep(
    k: int,
    epsilons: Iterable[float],
    policies: Mapping[str, PolicySpec],
    objective: Objective = Objective.AVERAGE_AOI,
    *,
    space: SearchSpace | None = None,
) -> list[SweepRow]:
    """Evaluate every (eps, policy) pair; ``AUTO`` entries run :func:`optimize` per eps."""
    rows = []
    for eps in epsilons:
        channel = ErasureChannel(eps)
        for label, spec in policies.items():
            if spec is AUTO:
                sp = space or SearchSpace(objective=objective)
                if sp.objective is not objective:
                    raise ValueError("sweep objective and search-space objective differ")
                res = optimize(k, channel, sp)
                rows.append(SweepRow(channel.epsilon, label, res.best_policy, res.best_value))
                continue
            policy = spec(channel) if callable(spec) else spec
            if policy.k != k:
                raise ValueError(f"policy {label!r} has {policy.k} caps, expected K={k}")
            rows.append(SweepRow(channel.epsilon, label, policy, _objective(policy, channel, objective)))
    return rows
