"""Synthetic job traces with diurnal and seasonal demand."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DAY = 86400.0


@dataclass(frozen=True)
class Job:
    arrival_time: float
    true_duration: float
    app: str


@dataclass(frozen=True)
class WorkloadConfig:
    """Arrival and duration model.

    Each app submits ``jobs_per_day * seasonal(day)`` jobs per day (rounded).
    Within a day, arrival density peaks around ``peak_hour`` at
    ``peak_factor`` times the trough density; ``peak_factor=1`` is uniform.
    """

    n_apps: int = 5
    days: int = 360
    jobs_per_day: float = 20.0
    peak_factor: float = 4.0
    peak_hour: float = 14.0
    seasonal_amplitude: float = 0.6
    season_days: float = 360.0
    random_phase: bool = True
    phase: float = 0.0
    mean_duration: float = 600.0
    duration_sigma: float = 0.6
    app_spread: float = 0.5
    diurnal_duration_amplitude: float = 0.3

    def app_ids(self) -> list[str]:
        return [f"A{i + 1}" for i in range(self.n_apps)]


def _diurnal_density(hours: np.ndarray, cfg: WorkloadConfig) -> np.ndarray:
    bump = 0.5 * (1.0 + np.cos(2 * np.pi * (hours - cfg.peak_hour) / 24.0))
    return 1.0 + (cfg.peak_factor - 1.0) * bump


def seasonal_factor(day: float, cfg: WorkloadConfig, phase: float) -> float:
    return 1.0 + cfg.seasonal_amplitude * math.sin(2 * math.pi * (day / cfg.season_days + phase))


def generate_workload(cfg: WorkloadConfig, seed: int) -> list[Job]:
    """Deterministic trace for ``seed``, sorted by arrival time."""
    if cfg.days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    phase = float(rng.uniform(0.0, 1.0)) if cfg.random_phase else cfg.phase
    app_means = {
        app: cfg.mean_duration * float(np.exp(rng.uniform(-cfg.app_spread, cfg.app_spread)))
        for app in cfg.app_ids()
    }
    fmax = max(1.0, cfg.peak_factor)
    jobs: list[Job] = []
    for day in range(cfg.days):
        count = int(round(cfg.jobs_per_day * max(0.0, seasonal_factor(day + 0.5, cfg, phase))))
        for app in cfg.app_ids():
            hours = _sample_hours(rng, count, cfg, fmax)
            noise = rng.lognormal(0.0, cfg.duration_sigma, size=count)
            shape = 1.0 + cfg.diurnal_duration_amplitude * np.sin(2 * np.pi * hours / 24.0)
            durations = np.maximum(1.0, app_means[app] * noise * shape)
            for h, dur in zip(hours, durations):
                jobs.append(Job(day * DAY + float(h) * 3600.0, float(dur), app))
    jobs.sort(key=lambda j: j.arrival_time)
    return jobs


def _sample_hours(rng: np.random.Generator, count: int, cfg: WorkloadConfig, fmax: float):
    out = np.empty(0)
    while out.size < count:
        need = count - out.size
        cand = rng.uniform(0.0, 24.0, size=2 * need + 8)
        keep = rng.uniform(0.0, fmax, size=cand.size) < _diurnal_density(cand, cfg)
        out = np.concatenate([out, cand[keep][:need]])
    return out


def observed_rate(trace: Sequence[Job], start: float, end: float) -> float:
    """Jobs per day arriving in ``[start, end)``."""
    if end <= start:
        return 0.0
    n = sum(1 for j in trace if start <= j.arrival_time < end)
    return n / ((end - start) / DAY)


def write_trace(trace: Sequence[Job], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arrival_time", "app_id", "true_duration"])
        for job in trace:
            writer.writerow([repr(job.arrival_time), job.app, repr(job.true_duration)])


def read_trace(path: str | Path) -> list[Job]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [Job(float(r["arrival_time"]), float(r["true_duration"]), r["app_id"])
                for r in reader]
