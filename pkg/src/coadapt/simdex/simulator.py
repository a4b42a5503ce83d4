"""Discrete-event job-dispatching simulation with an autoscaled worker pool."""

from __future__ import annotations

import csv
import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .estimators import EstimatorState, estimate_duration, update_estimator
from .workload import DAY, Job

ECONOMY = "I-E"
PERFORMANCE = "I-P"
INFRA_STRATEGIES = (ECONOMY, PERFORMANCE)


def decide_active_workers(strategy: str, queue_length: int, m: int, threshold: int) -> int:
    """Number of workers to keep powered under an infrastructure strategy."""
    if m < 1 or threshold < 1:
        raise ValueError("m and threshold must be >= 1")
    if strategy == PERFORMANCE:
        return m
    if strategy == ECONOMY:
        return min(m, max(1, math.ceil(queue_length / threshold)))
    raise ValueError(f"unknown infrastructure strategy {strategy!r}")


@dataclass(frozen=True)
class Thresholds:
    delay_limit: float = 60.0
    deadline_factor: float = 2.0


@dataclass(frozen=True)
class ScheduleEntry:
    """Strategies in force from time ``t`` (seconds) on."""

    t: float
    infra: str
    apps: Mapping[str, str] = field(default_factory=dict)
    objective: float = math.nan


@dataclass
class SimMetrics:
    jobs_total: int = 0
    jobs_delayed: int = 0
    jobs_late: int = 0
    jobs_on_time: int = 0
    worker_activity_integral: float = 0.0
    duration: float = 0.0

    @property
    def avg_active_workers(self) -> float:
        return self.worker_activity_integral / self.duration if self.duration else 0.0

    @property
    def pct_delayed(self) -> float:
        return 100.0 * self.jobs_delayed / self.jobs_total if self.jobs_total else 0.0

    @property
    def pct_late(self) -> float:
        return 100.0 * self.jobs_late / self.jobs_total if self.jobs_total else 0.0


@dataclass(frozen=True)
class TimelineRow:
    t: float
    delayed: int
    late: int
    active_workers: float
    objective: float


@dataclass
class JobOutcome:
    job: Job
    start_time: float
    finish_time: float
    delayed: bool
    late: bool


@dataclass
class SimResult:
    metrics: SimMetrics
    timeline: list[TimelineRow]
    outcomes: list[JobOutcome]


class _Worker:
    __slots__ = ("queue", "running", "run_start", "run_estimate", "queued_estimate")

    def __init__(self):
        self.queue: deque[int] = deque()
        self.running: int | None = None
        self.run_start = 0.0
        self.run_estimate = 0.0
        self.queued_estimate = 0.0

    def pending(self, now: float) -> float:
        left = max(0.0, self.run_estimate - (now - self.run_start)) if self.running is not None else 0.0
        return left + self.queued_estimate

    @property
    def busy(self) -> bool:
        return self.running is not None or bool(self.queue)


class _Activity:
    """Integrates the number of powered workers over time, also per day."""

    def __init__(self):
        self.count = 0
        self.since = 0.0
        self.total = 0.0
        self.per_day: dict[int, float] = {}

    def set(self, now: float, count: int) -> None:
        if count != self.count:
            self.close(now)
            self.count = count

    def close(self, now: float) -> None:
        if now > self.since:
            self.total += self.count * (now - self.since)
            a = self.since
            while a < now:
                day = int(a // DAY)
                b = min(now, (day + 1) * DAY)
                self.per_day[day] = self.per_day.get(day, 0.0) + self.count * (b - a)
                a = b
        self.since = now


def simulate(
    trace: Sequence[Job],
    schedule: Sequence[ScheduleEntry],
    thresholds: Thresholds = Thresholds(),
    m: int = 4,
    scale_threshold: int = 1,
    scale_interval: float = 60.0,
    horizon: float | None = None,
    estimator: EstimatorState = EstimatorState(),
) -> SimResult:
    """Run the dispatcher over ``trace`` under a time-ordered strategy schedule.

    Each job goes to the active worker with the least pending estimated work
    (idle workers first on ties, then lowest index). Workers run FIFO queues.
    Under ``I-E`` the first ``k`` workers accept jobs, ``k`` following the
    number of jobs in the system. The scaling decision is revisited at most
    once per ``scale_interval`` seconds (and at every strategy switch); a
    worker outside the active set stays powered until its queue drains.
    """
    if not schedule:
        raise ValueError("schedule must contain at least one entry")
    schedule = sorted(schedule, key=lambda e: e.t)
    if schedule[0].t > (trace[0].arrival_time if trace else 0.0):
        raise ValueError("schedule must start at or before the first arrival")

    workers = [_Worker() for _ in range(m)]
    estimators: dict[str, EstimatorState] = {}
    estimates = [0.0] * len(trace)
    starts = [math.nan] * len(trace)
    finishes = [math.nan] * len(trace)
    completions: list[tuple[float, int, int]] = []
    activity = _Activity()
    in_system = 0
    sched_idx = 0
    current = schedule[0]
    target = 1
    decided_at = -math.inf

    def powered() -> int:
        return sum(1 for i, w in enumerate(workers) if i < target or w.busy)

    def rescale(now: float, force: bool = False) -> None:
        nonlocal target, decided_at
        if force or now - decided_at >= scale_interval:
            target = decide_active_workers(current.infra, in_system, m, scale_threshold)
            decided_at = now
        activity.set(now, powered())

    def start_next(i: int, now: float) -> None:
        w = workers[i]
        if w.running is None and w.queue:
            j = w.queue.popleft()
            w.queued_estimate -= estimates[j]
            if not w.queue:
                w.queued_estimate = 0.0
            w.running, w.run_start, w.run_estimate = j, now, estimates[j]
            starts[j] = now
            heapq.heappush(completions, (now + trace[j].true_duration, i, j))

    def app_state(app: str) -> EstimatorState:
        strategy = current.apps.get(app)
        state = estimators.get(app, estimator)
        if strategy is not None and state.strategy != strategy:
            state = state.with_strategy(strategy)
        estimators[app] = state
        return state

    def complete(now: float, i: int, j: int) -> None:
        nonlocal in_system
        w = workers[i]
        w.running = None
        finishes[j] = now
        in_system -= 1
        job = trace[j]
        estimators[job.app] = update_estimator(app_state(job.app), job, job.true_duration)
        start_next(i, now)
        rescale(now)

    activity.set(schedule[0].t, 0)
    rescale(schedule[0].t, force=True)
    sched_idx = 1
    for j, job in enumerate(trace):
        now = job.arrival_time
        while True:
            next_completion = completions[0][0] if completions else math.inf
            next_switch = schedule[sched_idx].t if sched_idx < len(schedule) else math.inf
            if next_completion <= now and next_completion <= next_switch:
                t, i, k = heapq.heappop(completions)
                complete(t, i, k)
            elif next_switch <= now:
                current = schedule[sched_idx]
                sched_idx += 1
                rescale(next_switch, force=True)
            else:
                break

        in_system += 1
        rescale(now)
        estimates[j] = estimate_duration(app_state(job.app), job)
        i = min(range(target), key=lambda k: (workers[k].pending(now), workers[k].busy, k))
        w = workers[i]
        w.queue.append(j)
        w.queued_estimate += estimates[j]
        start_next(i, now)
        activity.set(now, powered())

    end_of_trace = horizon if horizon is not None else 0.0
    while completions or (sched_idx < len(schedule) and schedule[sched_idx].t < end_of_trace):
        next_completion = completions[0][0] if completions else math.inf
        next_switch = schedule[sched_idx].t if sched_idx < len(schedule) else math.inf
        if next_completion <= next_switch:
            t, i, k = heapq.heappop(completions)
            complete(t, i, k)
        else:
            current = schedule[sched_idx]
            sched_idx += 1
            rescale(next_switch, force=True)

    last = max([end_of_trace, activity.since, *(f for f in finishes if not math.isnan(f))])
    activity.close(last)

    metrics = SimMetrics(jobs_total=len(trace), duration=last - schedule[0].t,
                         worker_activity_integral=activity.total)
    outcomes = []
    per_day: dict[int, list[int]] = {}
    for j, job in enumerate(trace):
        delayed = starts[j] - job.arrival_time > thresholds.delay_limit
        late = finishes[j] > job.arrival_time + thresholds.deadline_factor * job.true_duration
        # terminal states partition the jobs: late wins over delayed
        if late:
            metrics.jobs_late += 1
        elif delayed:
            metrics.jobs_delayed += 1
        else:
            metrics.jobs_on_time += 1
        counts = per_day.setdefault(int(job.arrival_time // DAY), [0, 0])
        counts[0] += int(delayed and not late)
        counts[1] += int(late)
        outcomes.append(JobOutcome(job, starts[j], finishes[j], delayed and not late, late))

    timeline = []
    n_days = max(1, math.ceil(last / DAY))
    entry_idx = 0
    for day in range(n_days):
        t0 = day * DAY
        while entry_idx + 1 < len(schedule) and schedule[entry_idx + 1].t <= t0:
            entry_idx += 1
        span = min(DAY, last - t0)
        busy = activity.per_day.get(day, 0.0)
        counts = per_day.get(day, [0, 0])
        timeline.append(TimelineRow(
            t=float(day),
            delayed=counts[0],
            late=counts[1],
            active_workers=busy / span if span > 0 else 0.0,
            objective=schedule[entry_idx].objective,
        ))
    return SimResult(metrics, timeline, outcomes)


def write_timeline(rows: Sequence[TimelineRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "delayed", "late", "active_workers", "objective"])
        for r in rows:
            writer.writerow([r.t, r.delayed, r.late, f"{r.active_workers:.6f}", r.objective])
