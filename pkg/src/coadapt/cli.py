"""Command line: ``coadapt solve|coordinate|rq1|rq2|summarize|columns``.

Exit codes: 0 success, 2 validation or input error, 3 infeasible instance.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import data
from .coordination import InvalidSpec, load_spec, run_coordination_round
from .dcop import DcopError, InvalidInstance, format_cost, load_instance, validate_instance
from .dpop import pseudo_forest, solve_dpop
from .exhaustive import SolveStats, solve_exhaustive
from .experiments import (
    ParseError,
    Rq1Config,
    Rq2Config,
    columns,
    render_summary,
    run_rq1,
    run_rq2,
    summarize,
    write_rq1,
    write_rq2,
)
from .runtime import partition_views, run_protocol
from .simdex.simulator import Thresholds, write_timeline

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("coadapt")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_input(path: str) -> Path:
    p = Path(path)
    if not p.exists() and data.exists(path):
        return data.path(path)
    return p


def _emit(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    instance = load_instance(_resolve_input(args.input))
    report = validate_instance(instance)
    if report:
        for v in report:
            log.error("invalid instance: %s", v)
        return EXIT_INVALID
    if args.algorithm == "dpop":
        if args.transcript:
            views = partition_views(instance)
            solution, stats, transcript = run_protocol(views, pseudo_forest(instance))
            transcript.write(args.transcript)
        else:
            solution, stats = solve_dpop(instance)
    else:
        stats = SolveStats()
        solution = solve_exhaustive(instance, stats=stats)
        if args.transcript:
            Path(args.transcript).write_text("")
    _emit({
        "algorithm": args.algorithm,
        "assignment": dict(solution.assignment),
        "cost": format_cost(solution.cost),
        "feasible": solution.feasible,
    }, args.output)
    if args.stats:
        _emit(stats.as_dict(), args.stats)
    return EXIT_OK if solution.feasible else EXIT_INFEASIBLE


def cmd_coordinate(args) -> int:
    spec = load_spec(_resolve_input(args.spec))
    result = run_coordination_round(spec, args.algorithm)
    _emit({
        "algorithm": args.algorithm,
        "assignment": result.assignment,
        "cost": format_cost(result.cost),
        "feasible": result.feasible,
        "stats": result.stats.as_dict(),
    }, args.output)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_rq1(args) -> int:
    config = Rq1Config(
        n_apps=args.apps,
        days=args.days,
        period=args.period,
        seeds=tuple(range(args.first_seed, args.first_seed + args.seeds)),
        magnitude=args.magnitude,
        thresholds=Thresholds(args.delay_limit, args.deadline_factor),
        workers=args.workers,
        algorithm=args.algorithm,
    )
    rows, runs = run_rq1(config)
    write_rq1(rows, args.out)
    if args.timeline_dir:
        out = Path(args.timeline_dir)
        out.mkdir(parents=True, exist_ok=True)
        for run in runs:
            for arm, arm_run in run.arms.items():
                write_timeline(arm_run.result.timeline, out / f"timeline_seed{run.seed}_{arm}.csv")
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def cmd_rq2(args) -> int:
    rows = run_rq2(Rq2Config(apps=args.apps, domains=args.domains, seed=args.seed))
    write_rq2(rows, args.out)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def cmd_summarize(args) -> int:
    sys.stdout.write(render_summary(summarize(args.input)))
    return EXIT_OK


def cmd_columns(args) -> int:
    sys.stdout.write(columns(args.input, args.x, args.y, args.group))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coadapt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a DCOP problem file")
    p.add_argument("--input", required=True,
                   help="DCOP JSON file, or the name of a bundled example (videoservice.json)")
    p.add_argument("--algorithm", choices=["dpop", "exhaustive"], default="dpop")
    p.add_argument("--output", help="solution JSON path (default: stdout)")
    p.add_argument("--stats", help="solver statistics JSON path")
    p.add_argument("--transcript", help="message transcript JSON-lines path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("coordinate", help="run one coordination round on a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--algorithm", choices=["dpop", "exhaustive"], default="dpop")
    p.add_argument("--output")
    p.set_defaults(func=cmd_coordinate)

    p = sub.add_parser("rq1", help="baselines vs. coordination on the job-dispatching exemplar")
    p.add_argument("--apps", type=int, default=5)
    p.add_argument("--days", type=int, default=360)
    p.add_argument("--period", type=int, default=180)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--magnitude", type=float, default=1.0, help="perturbation half-width")
    p.add_argument("--delay-limit", type=float, default=60.0)
    p.add_argument("--deadline-factor", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--algorithm", choices=["dpop", "exhaustive"], default="dpop")
    p.add_argument("--timeline-dir", help="write per-run timeline CSVs here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rq1)

    p = sub.add_parser("rq2", help="DPOP overhead sweep over app counts and domain sizes")
    p.add_argument("--apps", type=_int_list, default=[2, 5, 10, 20, 50])
    p.add_argument("--domains", type=_int_list, default=[2, 3, 5])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rq2)

    p = sub.add_parser("summarize", help="per-arm averages of an rq1 CSV")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("columns", help="gnuplot-ready columns from a CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--group")
    p.set_defaults(func=cmd_columns)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidInstance, InvalidSpec, ParseError, DcopError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
