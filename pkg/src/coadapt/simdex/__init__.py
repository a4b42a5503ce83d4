"""Job-dispatching exemplar: an infrastructure and n applications coordinating strategies."""

from .concerns import INFRA, SimdexConcerns, SimdexParams, build_simdex_concerns, simdex_tables
from .estimators import (
    APP_STRATEGIES,
    EstimatorState,
    estimate_duration,
    squared_error_gradient,
    update_estimator,
)
from .simulator import (
    ECONOMY,
    INFRA_STRATEGIES,
    PERFORMANCE,
    ScheduleEntry,
    SimMetrics,
    SimResult,
    Thresholds,
    decide_active_workers,
    simulate,
)
from .workload import Job, WorkloadConfig, generate_workload, read_trace, write_trace

__all__ = [
    "APP_STRATEGIES",
    "ECONOMY",
    "INFRA",
    "INFRA_STRATEGIES",
    "PERFORMANCE",
    "EstimatorState",
    "Job",
    "ScheduleEntry",
    "SimMetrics",
    "SimResult",
    "SimdexConcerns",
    "SimdexParams",
    "Thresholds",
    "WorkloadConfig",
    "build_simdex_concerns",
    "decide_active_workers",
    "estimate_duration",
    "generate_workload",
    "read_trace",
    "simdex_tables",
    "simulate",
    "squared_error_gradient",
    "update_estimator",
    "write_trace",
]
