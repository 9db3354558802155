"""Curve data comparing fixed policies, optimized policies and bounds across eps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from erasure_aoi.closed_forms import aoi_bounds, paoi_cap_lower_bounds, paoi_lower_bound_policy
from erasure_aoi.optimizer import (
    AUTO,
    Objective,
    SearchSpace,
    optimize,
    prune_bound_paoi,
    sweep,
)
from erasure_aoi.policy import UNBOUNDED, ErasureChannel, Policy

FIG2_LABELS = ("all-ones", "all-inf", "one-then-inf", "optimal", "lower-bound", "upper-bound")
FIG3_LABELS = ("all-inf", "paoi-lb", "optimal")


def default_eps_grid() -> list[float]:
    return [round(0.05 * i, 10) for i in range(1, 19)]


@dataclass(frozen=True)
class FigureRow:
    epsilon: float
    policy_label: str
    value: float
    policy: Policy | None = None


def average_aoi_curves(k: int = 5, epsilons: Sequence[float] | None = None, cap_max: int = 12) -> list[FigureRow]:
    """Average AoI of fixed policies, the searched optimum and the two bounds."""
    epsilons = default_eps_grid() if epsilons is None else list(epsilons)
    fixed = {
        "all-ones": Policy.all_ones(k),
        "all-inf": Policy.all_unbounded(k),
        "one-then-inf": Policy((1,) + (UNBOUNDED,) * (k - 1)),
        "optimal": AUTO,
    }
    space = SearchSpace(objective=Objective.AVERAGE_AOI, cap_max=cap_max)
    rows = []
    for eps in epsilons:
        for r in sweep(k, [eps], fixed, Objective.AVERAGE_AOI, space=space):
            rows.append(FigureRow(r.epsilon, r.policy_id, r.value, r.policy))
        b = aoi_bounds(k, ErasureChannel(eps))
        rows.append(FigureRow(float(eps), "lower-bound", b.lower))
        rows.append(FigureRow(float(eps), "upper-bound", b.upper))
    return rows


def peak_aoi_curves(k: int = 5, epsilons: Sequence[float] | None = None, cap_max: int = 12) -> list[FigureRow]:
    """PAoI of the never-drop policy, the cap lower-bound policy and the optimum.

    The optimum is searched over the pruned space with ``cap_max`` widened to
    cover the largest cap lower bound, so the lower-bound policy always lies
    inside the searched space.
    """
    epsilons = default_eps_grid() if epsilons is None else list(epsilons)
    rows = []
    for eps in epsilons:
        channel = ErasureChannel(eps)
        widest = max(cap_max, max(paoi_cap_lower_bounds(k, channel)))
        space = prune_bound_paoi(k, channel, SearchSpace(objective=Objective.PAOI, cap_max=widest))
        fixed = {
            "all-inf": Policy.all_unbounded(k),
            "paoi-lb": lambda ch: paoi_lower_bound_policy(k, ch),
        }
        for r in sweep(k, [eps], fixed, Objective.PAOI):
            rows.append(FigureRow(r.epsilon, r.policy_id, r.value, r.policy))
        res = optimize(k, channel, space)
        rows.append(FigureRow(channel.epsilon, "optimal", res.best_value, res.best_policy))
    return rows


def write_curves(path: Path, rows: Iterable[FigureRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "policy_label", "value"])
        for r in rows:
            w.writerow([repr(r.epsilon), r.policy_label, repr(r.value)])


def read_curves(path: Path) -> dict[tuple[float, str], float]:
    with open(path, newline="") as fh:
        return {(float(r["epsilon"]), r["policy_label"]): float(r["value"]) for r in csv.DictReader(fh)}


def parse_eps_grid(text: str) -> list[float]:
    """``"0.05:0.9:0.05"`` (inclusive range) or ``"0.1,0.5,0.8"``."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad grid {text!r}; expected start:stop:step")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]
