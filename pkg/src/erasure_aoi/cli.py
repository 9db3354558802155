"""Command-line front end: ``erasure-aoi {eval,simulate,optimize,bounds,figures}``.

Every number printed comes straight from a library call. Exit codes: 0 on
success, 2 for usage errors, 3 for numeric or simulation pathologies.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from erasure_aoi import closed_forms as cf
from erasure_aoi.analytic import evaluate
from erasure_aoi.figures import (
    FigureRow,
    average_aoi_curves,
    default_eps_grid,
    parse_eps_grid,
    peak_aoi_curves,
    write_curves,
)
from erasure_aoi.optimizer import (
    Objective,
    SearchSpace,
    SearchSpaceTooLarge,
    optimize,
    prune_bound_paoi,
)
from erasure_aoi.policy import (
    UNBOUNDED,
    ChannelError,
    ErasureChannel,
    Policy,
    PolicyError,
    format_policy,
    parse_policy,
)
from erasure_aoi.simulator import SimConfig, SimulationError, default_threads, simulate

EXIT_USAGE = 2
EXIT_NUMERIC = 3

NAMED_POLICIES = ("all-ones", "all-inf", "one-then-inf", "paoi-lb", "small-eps")


class UsageError(Exception):
    pass


class NumericError(Exception):
    pass


@dataclass
class OutputRecord:
    command: str
    k: int
    epsilon: float
    policy: str
    objective: str
    value: float
    ci_halfwidth: float | None = None
    provenance: str = "analytic"
    detail: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise NumericError(f"{self.objective} is not finite ({self.value})")
        if self.ci_halfwidth is not None and not math.isfinite(self.ci_halfwidth):
            self.ci_halfwidth = None


FIELDNAMES = [f.name for f in fields(OutputRecord)]


def write_records(records: Iterable[OutputRecord], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "jsonl":
        for r in records:
            out.write(json.dumps(asdict(r)) + "\n")
        return
    w = csv.DictWriter(out, fieldnames=FIELDNAMES, lineterminator="\n")
    w.writeheader()
    for r in records:
        row = asdict(r)
        row["epsilon"] = repr(r.epsilon)
        row["value"] = repr(r.value)
        row["ci_halfwidth"] = "" if r.ci_halfwidth is None else repr(r.ci_halfwidth)
        w.writerow(row)


def resolve_policy(text: str, k: int | None, channel: ErasureChannel) -> Policy:
    name = text.strip().lower()
    if name in NAMED_POLICIES:
        if k is None:
            raise UsageError(f"--k is required with the named policy {name!r}")
        if name == "all-ones":
            return Policy.all_ones(k)
        if name == "all-inf":
            return Policy.all_unbounded(k)
        if name == "one-then-inf":
            return Policy((1,) + (UNBOUNDED,) * (k - 1))
        if name == "paoi-lb":
            return cf.paoi_lower_bound_policy(k, channel)
        return cf.small_eps_optimal_policy(k)
    try:
        policy = parse_policy(text)
    except PolicyError as exc:
        raise UsageError(str(exc)) from None
    if k is not None and policy.k != k:
        raise UsageError(f"policy has {policy.k} caps but --k is {k}")
    return policy


def _channel(eps: float) -> ErasureChannel:
    try:
        return ErasureChannel(eps)
    except ChannelError as exc:
        raise UsageError(str(exc)) from None


def cmd_eval(args) -> list[OutputRecord]:
    channel = _channel(args.eps)
    policy = resolve_policy(args.policy, args.k, channel)
    res = evaluate(policy, channel)
    base = dict(command="eval", k=policy.k, epsilon=channel.epsilon, policy=format_policy(policy))
    return [
        OutputRecord(**base, objective="average_aoi", value=res.average_aoi),
        OutputRecord(**base, objective="peak_aoi", value=res.peak_aoi),
    ]


def cmd_simulate(args) -> list[OutputRecord]:
    channel = _channel(args.eps)
    policy = resolve_policy(args.policy, args.k, channel)
    try:
        config = SimConfig(
            horizon=args.horizon, seed=args.seed, replications=args.reps,
            warmup=args.warmup, threads=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        st = simulate(policy, channel, config)
    except SimulationError as exc:
        raise NumericError(str(exc)) from None
    base = dict(command="simulate", k=policy.k, epsilon=channel.epsilon,
                policy=format_policy(policy), provenance="simulated")
    detail = f"horizon={config.horizon};seed={config.seed};reps={config.replications};warmup={config.warmup}"
    return [
        OutputRecord(**base, objective="average_aoi", value=st.avg_aoi_mean,
                     ci_halfwidth=st.avg_aoi_ci_halfwidth, detail=detail),
        OutputRecord(**base, objective="peak_aoi", value=st.paoi_mean,
                     ci_halfwidth=st.paoi_ci_halfwidth, detail=detail),
        OutputRecord(**base, objective="e_s", value=st.emp_e_s, detail=detail),
        OutputRecord(**base, objective="e_D", value=st.emp_e_D, detail=detail),
        OutputRecord(**base, objective="n_successes", value=float(st.n_successes), detail=detail),
        OutputRecord(**base, objective="n_terminations", value=float(st.n_terminations), detail=detail),
    ]


def cmd_optimize(args) -> list[OutputRecord]:
    channel = _channel(args.eps)
    objective = Objective(args.objective)
    space = SearchSpace(
        objective=objective,
        cap_max=args.cap_max,
        include_unbounded=not args.no_unbounded,
        monotone_only=True if args.monotone else None,
    )
    if args.prune:
        if objective is not Objective.PAOI:
            raise UsageError("--prune is only valid with --objective paoi")
        space = prune_bound_paoi(args.k, channel, space)
    try:
        res = optimize(args.k, channel, space, limit=args.limit)
    except SearchSpaceTooLarge as exc:
        raise NumericError(str(exc)) from None
    if res.touches_cap_max:
        print(f"warning: best policy uses cap_max={args.cap_max}; a wider search may do better",
              file=sys.stderr)
    base = dict(command="optimize", k=args.k, epsilon=channel.epsilon, objective=objective.value)
    stats = (f"evaluated={res.evaluated};pruned={res.pruned};n_ties={res.n_ties};"
             f"touches_cap_max={str(res.touches_cap_max).lower()}")
    records = [OutputRecord(**base, policy=format_policy(res.best_policy), value=res.best_value,
                            detail="best;" + stats)]
    for tie in res.ties[1:]:
        records.append(OutputRecord(**base, policy=format_policy(tie), value=res.best_value, detail="tie"))
    return records


def cmd_bounds(args) -> list[OutputRecord]:
    channel = _channel(args.eps)
    k = args.k
    eps = channel.epsilon
    base = dict(command="bounds", k=k, epsilon=eps)
    ones, infs = Policy.all_ones(k), Policy.all_unbounded(k)
    b = cf.aoi_bounds(k, channel)
    recs = [
        OutputRecord(**base, policy=format_policy(ones), objective="zero_error_aoi",
                     value=cf.zero_error_aoi(k, channel), provenance="analytic"),
    ]
    if eps > 0:
        audit = cf.zero_error_audit(k, channel)
        recs.append(OutputRecord(**base, policy=format_policy(ones), objective="zero_error_aoi_printed",
                                 value=audit.printed, provenance="closed-form", detail=audit.report()))
        recs.append(OutputRecord(**base, policy=format_policy(ones), objective="zero_error_aoi_sign_corrected",
                                 value=audit.sign_corrected, provenance="closed-form"))
    recs += [
        OutputRecord(**base, policy=format_policy(infs), objective="infinite_error_aoi",
                     value=cf.infinite_error_aoi(k, channel), provenance="closed-form"),
        OutputRecord(**base, policy="", objective="aoi_lower_bound", value=b.lower, provenance="bound"),
        OutputRecord(**base, policy="", objective="aoi_upper_bound", value=b.upper, provenance="bound"),
        OutputRecord(**base, policy=format_policy(cf.small_eps_optimal_policy(k)),
                     objective="small_eps_optimal_aoi", value=cf.small_eps_optimal_aoi(k, channel),
                     provenance="closed-form", detail="first order in eps"),
        OutputRecord(**base, policy="", objective="small_eps_optimal_paoi",
                     value=cf.small_eps_optimal_paoi(k, channel), provenance="closed-form",
                     detail="first order in eps"),
    ]
    lb = cf.paoi_lower_bound_policy(k, channel)
    recs.append(OutputRecord(**base, policy=format_policy(lb), objective="paoi_cap_lower_bounds",
                             value=evaluate(lb, channel).peak_aoi, provenance="bound",
                             detail="value is the PAoI of the lower-bound cap vector"))
    if k == 2 and eps > 0:
        lo, hi = cf.paoi_c2_range(channel)
        recs.append(OutputRecord(**base, policy="", objective="paoi_c2_lo", value=float(lo), provenance="bound"))
        recs.append(OutputRecord(**base, policy="", objective="paoi_c2_hi", value=float(hi), provenance="bound"))
    return recs


def cmd_figures(args) -> list[OutputRecord]:
    try:
        grid = parse_eps_grid(args.eps_grid) if args.eps_grid else default_eps_grid()
        for e in grid:
            ErasureChannel(e)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out_dir}: {exc}") from None
    fig2 = average_aoi_curves(args.k, grid, cap_max=args.cap_max)
    fig3 = peak_aoi_curves(args.k, grid, cap_max=args.cap_max)
    try:
        write_curves(out_dir / "fig2_average_aoi.csv", fig2)
        write_curves(out_dir / "fig3_peak_aoi.csv", fig3)
    except OSError as exc:
        raise UsageError(f"cannot write to {out_dir}: {exc}") from None

    def to_record(r: FigureRow, objective: str) -> OutputRecord:
        is_bound = r.policy is None
        return OutputRecord(
            command="figures", k=args.k, epsilon=r.epsilon,
            policy="" if is_bound else format_policy(r.policy), objective=objective,
            value=r.value, provenance="bound" if is_bound else "analytic", detail=r.policy_label,
        )

    return [to_record(r, "average_aoi") for r in fig2] + [to_record(r, "peak_aoi") for r in fig3]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $ERASURE_AOI_THREADS or 1)")

    parser = argparse.ArgumentParser(prog="erasure-aoi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def channel_args(p, policy=True):
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--eps", type=float, required=True)
        if policy:
            p.add_argument("--policy", required=True,
                           help=f"caps like '1,2,inf' or one of {', '.join(NAMED_POLICIES)}")

    p = sub.add_parser("eval", parents=[common], help="analytic average and peak AoI")
    channel_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate with CIs")
    channel_args(p)
    p.add_argument("--horizon", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--warmup", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", parents=[common], help="exhaustive cap search")
    channel_args(p, policy=False)
    p.add_argument("--objective", choices=("aoi", "paoi"), default="aoi")
    p.add_argument("--cap-max", type=int, default=12)
    p.add_argument("--no-unbounded", action="store_true")
    p.add_argument("--prune", action="store_true", help="PAoI only: apply the proven cap bounds")
    p.add_argument("--monotone", action="store_true",
                   help="restrict to nondecreasing caps (heuristic for aoi)")
    p.add_argument("--limit", type=int, default=10**8)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bounds", parents=[common], help="closed forms and bounds")
    channel_args(p, policy=False)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("figures", parents=[common], help="write curve data CSVs")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--eps-grid", default=None, help="start:stop:step or comma list (default 0.05:0.9:0.05)")
    p.add_argument("--cap-max", type=int, default=12)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = default_threads()
    if args.command in ("optimize", "bounds") and args.k is None:
        parser.error("--k is required")
    if getattr(args, "k", None) is not None and args.k < 1:
        parser.error("--k must be >= 1")
    try:
        records = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_records(records, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
