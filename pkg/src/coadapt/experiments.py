"""Experiment drivers: coordination vs. baselines (RQ1) and solver scaling (RQ2)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .coordination import (
    CoordinationSpec,
    LocalConcern,
    SharedConcern,
    StrategySet,
    compile_to_dcop,
    run_coordination_round,
)
from .dpop import solve_dpop
from .simdex.concerns import INFRA, SimdexParams, simdex_tables
from .simdex.simulator import ECONOMY, PERFORMANCE, ScheduleEntry, SimResult, Thresholds, simulate
from .simdex.workload import DAY, WorkloadConfig, generate_workload, observed_rate

BASELINE_1 = "baseline1"
BASELINE_2 = "baseline2"
COORDINATION = "coordination"
ARMS = (BASELINE_1, BASELINE_2, COORDINATION)
ARM_LABELS = {BASELINE_1: "Baseline 1", BASELINE_2: "Baseline 2", COORDINATION: "Coordination"}
# infrastructure strategy the baselines are clamped to; None means coordinated
ARM_FIXED_INFRA = {BASELINE_1: ECONOMY, BASELINE_2: PERFORMANCE, COORDINATION: None}

RQ1_COLUMNS = ["seed", "arm", "round", "t_days", "objective", "strategy_I",
               "pct_delayed", "pct_late", "avg_workers"]
RQ2_COLUMNS = ["n_apps", "domain_size", "messages", "payload_cells", "constraint_evals", "wall_ms"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Rq1Config:
    n_apps: int = 5
    days: int = 360
    period: int = 180
    seeds: Sequence[int] = tuple(range(10))
    magnitude: float = 1.0
    thresholds: Thresholds = Thresholds()
    workers: int = 4
    algorithm: str = "dpop"
    workload: WorkloadConfig | None = None
    concerns: SimdexParams | None = None

    def validate(self) -> None:
        if self.period > self.days:
            raise ValueError("coordination period must not exceed the horizon")
        if self.period < 1 or self.days < 1:
            raise ValueError("days and period must be >= 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.magnitude < 0:
            raise ValueError("perturbation magnitude must be >= 0")

    def workload_config(self) -> WorkloadConfig:
        base = self.workload or WorkloadConfig()
        return WorkloadConfig(**{**base.__dict__, "n_apps": self.n_apps, "days": self.days})

    def concern_params(self) -> SimdexParams:
        base = self.concerns or SimdexParams()
        return SimdexParams(**{**base.__dict__, "n_apps": self.n_apps})


@dataclass(frozen=True)
class Rq1Row:
    seed: int
    arm: str
    round: int
    t_days: float
    objective: float
    strategy_I: str
    pct_delayed: float
    pct_late: float
    avg_workers: float

    def as_csv(self) -> list:
        return [self.seed, self.arm, self.round, self.t_days, repr(self.objective),
                self.strategy_I, repr(self.pct_delayed), repr(self.pct_late),
                repr(self.avg_workers)]


@dataclass
class ArmRun:
    arm: str
    assignments: list[dict[str, str]] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)
    result: SimResult | None = None


@dataclass
class Rq1Run:
    seed: int
    round_times: list[float]
    loads: list[float]
    specs: list[CoordinationSpec]
    arms: dict[str, ArmRun]


def round_specs(config: Rq1Config, seed: int, trace) -> tuple[list[float], list[float], list]:
    """Concern specs for every coordination round of one seed.

    Shared by all arms of the seed: perturbations come from one seeded stream
    and the load is measured on the shared workload trace.
    """
    params = config.concern_params()
    rng = np.random.default_rng([seed, 1])
    tables = simdex_tables(params, rng)
    reference = config.n_apps * config.workload_config().jobs_per_day
    times, loads, specs = [], [], []
    for r in range(math.ceil(config.days / config.period)):
        t = r * config.period * DAY
        if r > 0:
            tables = tables.perturbed(rng, config.magnitude)
        load = 1.0 if r == 0 else observed_rate(trace, t - config.period * DAY, t) / reference
        times.append(t)
        loads.append(load)
        specs.append(tables.at_load(load, params.load_sensitivity).to_spec())
    return times, loads, specs


def run_rq1_seed(config: Rq1Config, seed: int) -> Rq1Run:
    trace = generate_workload(config.workload_config(), seed)
    times, loads, specs = round_specs(config, seed, trace)
    arms = {}
    for arm in ARMS:
        run = ArmRun(arm)
        schedule = []
        fixed_infra = ARM_FIXED_INFRA[arm]
        for t, spec in zip(times, specs):
            fixed = {INFRA: fixed_infra} if fixed_infra else None
            outcome = run_coordination_round(spec, config.algorithm, fixed)
            run.assignments.append(outcome.assignment)
            run.objectives.append(outcome.cost)
            apps = {k: v for k, v in outcome.assignment.items() if k != INFRA}
            schedule.append(ScheduleEntry(t, outcome.assignment[INFRA], apps, outcome.cost))
        run.result = simulate(trace, schedule, config.thresholds, m=config.workers,
                              horizon=config.days * DAY)
        arms[arm] = run
    return Rq1Run(seed, times, loads, specs, arms)


def rq1_rows(run: Rq1Run) -> list[Rq1Row]:
    rows = []
    for arm in ARMS:
        a = run.arms[arm]
        m = a.result.metrics
        for r, (t, assignment, obj) in enumerate(zip(run.round_times, a.assignments, a.objectives)):
            rows.append(Rq1Row(run.seed, arm, r, t / DAY, obj, assignment[INFRA],
                               m.pct_delayed, m.pct_late, m.avg_active_workers))
    return rows


def run_rq1(config: Rq1Config = Rq1Config()) -> tuple[list[Rq1Row], list[Rq1Run]]:
    """Run every seed and arm; rows are sorted by (seed, arm, round)."""
    config.validate()
    runs = [run_rq1_seed(config, seed) for seed in config.seeds]
    rows = [row for run in runs for row in rq1_rows(run)]
    order = {a: i for i, a in enumerate(ARMS)}
    rows.sort(key=lambda r: (r.seed, order[r.arm], r.round))
    return rows, runs


def write_rq1(rows: Iterable[Rq1Row], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RQ1_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


# -- RQ2 -------------------------------------------------------------------------


@dataclass(frozen=True)
class Rq2Config:
    apps: Sequence[int] = (2, 5, 10, 20, 50)
    domains: Sequence[int] = (2, 3, 5)
    seed: int = 0
    max_cost: int = 20

    def validate(self) -> None:
        if not self.apps or not self.domains:
            raise ValueError("sweeps must not be empty")
        if min(self.apps) < 1 or min(self.domains) < 1:
            raise ValueError("app counts and domain sizes must be >= 1")


@dataclass(frozen=True)
class Rq2Row:
    n_apps: int
    domain_size: int
    messages: int
    payload_cells: int
    constraint_evals: int
    wall_ms: float

    def as_csv(self) -> list:
        return [self.n_apps, self.domain_size, self.messages, self.payload_cells,
                self.constraint_evals, f"{self.wall_ms:.3f}"]


def star_spec(n_apps: int, domain_size: int, rng: np.random.Generator,
              max_cost: int = 20) -> CoordinationSpec:
    """Star-shaped spec: n apps and one infrastructure, ``domain_size`` strategies each.

    Apps carry private preference tables, the infrastructure has none, and
    each app shares one binary concern with the infrastructure.
    """
    app_strats = tuple(f"S{k + 1}" for k in range(domain_size))
    infra_strats = tuple(f"I{k + 1}" for k in range(domain_size))
    apps = [f"A{i + 1}" for i in range(n_apps)]
    sets = [StrategySet(a, app_strats) for a in apps] + [StrategySet(INFRA, infra_strats)]
    local = [LocalConcern(a, {s: float(rng.integers(0, max_cost + 1)) for s in app_strats})
             for a in apps]
    shared = [
        SharedConcern((a, INFRA), {(s, t): float(rng.integers(0, max_cost + 1))
                                   for s in app_strats for t in infra_strats})
        for a in apps
    ]
    return CoordinationSpec(sets, local, shared)


def run_rq2(config: Rq2Config = Rq2Config()) -> list[Rq2Row]:
    config.validate()
    rows = []
    for n in sorted(set(config.apps)):
        for d in sorted(set(config.domains)):
            rng = np.random.default_rng([config.seed, n, d])
            instance = compile_to_dcop(star_spec(n, d, rng, config.max_cost))
            _, stats = solve_dpop(instance)
            rows.append(Rq2Row(n, d, stats.message_count, stats.util_cells,
                               stats.constraint_evaluations, stats.wall_time * 1000.0))
    return rows


def write_rq2(rows: Iterable[Rq2Row], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RQ2_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


# -- summaries ---------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    arm: str
    pct_delayed: float
    pct_late: float
    avg_workers: float
    runs: int


def read_rq1(path: str | Path) -> list[Rq1Row]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RQ1_COLUMNS:
            raise ParseError(f"expected header {','.join(RQ1_COLUMNS)}", 1)
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(RQ1_COLUMNS):
                raise ParseError(f"expected {len(RQ1_COLUMNS)} fields, got {len(record)}", lineno)
            try:
                rows.append(Rq1Row(
                    seed=int(record[0]), arm=record[1], round=int(record[2]),
                    t_days=float(record[3]), objective=float(record[4]), strategy_I=record[5],
                    pct_delayed=float(record[6]), pct_late=float(record[7]),
                    avg_workers=float(record[8]),
                ))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return rows


def summarize_rows(rows: Sequence[Rq1Row]) -> list[SummaryRow]:
    """Average whole-run metrics over seeds, per arm.

    Run-level metrics repeat on every round row, so one row per (seed, arm)
    is taken.
    """
    per_run: dict[tuple[str, int], Rq1Row] = {}
    for row in rows:
        per_run.setdefault((row.arm, row.seed), row)
    arms = [a for a in ARMS if any(k[0] == a for k in per_run)]
    arms += sorted({k[0] for k in per_run} - set(arms))
    out = []
    for arm in arms:
        runs = [r for (a, _), r in per_run.items() if a == arm]
        out.append(SummaryRow(
            arm,
            float(np.mean([r.pct_delayed for r in runs])),
            float(np.mean([r.pct_late for r in runs])),
            float(np.mean([r.avg_workers for r in runs])),
            len(runs),
        ))
    return out


def summarize(path: str | Path) -> list[SummaryRow]:
    return summarize_rows(read_rq1(path))


def render_summary(rows: Sequence[SummaryRow]) -> str:
    """Plain-text table with the columns Experiment / Jobs delayed / Jobs late / Average workers."""
    header = ("Experiment", "Jobs delayed", "Jobs late", "Average workers")
    body = [(ARM_LABELS.get(r.arm, r.arm), f"{r.pct_delayed:.2f}%", f"{r.pct_late:.2f}%",
             f"{r.avg_workers:.2f}") for r in rows]
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(4)]
    lines = []
    for line in [header, *body]:
        lines.append("| " + " | ".join(cell.ljust(w) for cell, w in zip(line, widths)) + " |")
    rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    lines.insert(1, rule)
    return "\n".join(lines) + "\n"


def columns(path: str | Path, x: str, y: str, group: str | None = None) -> str:
    """Whitespace-separated columns from a CSV, one block per group value (gnuplot ``index``)."""
    with open(path, newline="") as fh:
        records = list(csv.DictReader(fh))
    if records and (x not in records[0] or y not in records[0]):
        raise ParseError(f"columns {x!r}/{y!r} not in header", 1)
    blocks: dict[str, list[tuple[str, str]]] = {}
    for rec in records:
        blocks.setdefault(rec[group] if group else "", []).append((rec[x], rec[y]))
    parts = []
    for key, pts in blocks.items():
        head = f"# {group}={key}\n" if group else ""
        parts.append(head + "".join(f"{a} {b}\n" for a, b in pts))
    return "\n\n".join(parts)
