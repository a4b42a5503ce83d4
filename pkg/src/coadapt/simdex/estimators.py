"""Job-duration estimators, one per adaptation strategy of an application.

``A-S`` moves a constant toward its nearest predefined limit on every update,
ignoring the observed duration. ``A-A`` is a running average. ``A-N`` is a
single linear neuron trained by gradient descent on squared error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .workload import Job

SIMPLE = "A-S"
AVERAGE = "A-A"
NEURAL = "A-N"
APP_STRATEGIES = (SIMPLE, AVERAGE, NEURAL)


def job_features(job: Job) -> np.ndarray:
    hour = (job.arrival_time % 86400.0) / 3600.0
    angle = 2 * math.pi * hour / 24.0
    return np.array([math.sin(angle), math.cos(angle)])


@dataclass(frozen=True)
class EstimatorState:
    strategy: str = AVERAGE
    # running statistics, updated on every observation
    count: int = 0
    mean: float = 0.0
    prior: float = 600.0
    # A-N linear model
    weights: tuple[float, ...] = (0.0, 0.0)
    bias: float = 600.0
    learning_rate: float = 0.01
    min_estimate: float = 1.0
    # A-S constant and its limits
    constant: float = 600.0
    lower: float = 60.0
    upper: float = 3600.0
    step: float = 60.0

    def with_strategy(self, strategy: str) -> "EstimatorState":
        if strategy not in APP_STRATEGIES:
            raise ValueError(f"unknown estimator strategy {strategy!r}")
        return replace(self, strategy=strategy)


def _predict(state: EstimatorState, x: np.ndarray) -> float:
    return float(np.dot(state.weights, x)) + state.bias


def estimate_duration(state: EstimatorState, job: Job, features: np.ndarray | None = None) -> float:
    if state.strategy == SIMPLE:
        return state.constant
    if state.strategy == AVERAGE:
        return state.mean if state.count else state.prior
    x = job_features(job) if features is None else features
    return max(state.min_estimate, _predict(state, x))


def squared_error_gradient(
    weights: np.ndarray, bias: float, x: np.ndarray, target: float
) -> tuple[np.ndarray, float]:
    """Gradient of ``(w.x + b - y)**2`` with respect to ``w`` and ``b``."""
    residual = float(np.dot(weights, x)) + bias - target
    return 2.0 * residual * x, 2.0 * residual


def update_estimator(
    state: EstimatorState, job: Job, actual: float, features: np.ndarray | None = None
) -> EstimatorState:
    if actual <= 0:
        raise ValueError("observed duration must be positive")
    count = state.count + 1
    mean = state.mean + (actual - state.mean) / count
    state = replace(state, count=count, mean=mean)

    if state.strategy == NEURAL:
        x = job_features(job) if features is None else features
        w = np.asarray(state.weights, dtype=float)
        gw, gb = squared_error_gradient(w, state.bias, x, actual)
        w = w - state.learning_rate * gw
        return replace(state, weights=tuple(float(v) for v in w),
                       bias=state.bias - state.learning_rate * gb)

    if state.strategy == SIMPLE:
        c = state.constant
        if c - state.lower <= state.upper - c:
            c = max(state.lower, c - state.step)
        else:
            c = min(state.upper, c + state.step)
        return replace(state, constant=c)
    return state
