"""Decentralized coordination of adaptation planning strategies via DCOP."""

from .coordination import (
    ConcernUpdate,
    CoordinationSpec,
    LocalConcern,
    SharedConcern,
    StrategySet,
    apply_update,
    compile_to_dcop,
    rho,
    run_coordination_round,
)
from .dcop import (
    INF,
    CostFunction,
    DcopInstance,
    Variable,
    constraint_graph,
    evaluate_assignment,
    load_instance,
    validate_instance,
)
from .dpop import build_pseudo_tree, recommend_algorithm, solve_dpop
from .exhaustive import Solution, SolveStats, solve_exhaustive
from .runtime import audit_privacy, partition_views, run_protocol

__version__ = "0.1.0"

__all__ = [
    "INF",
    "ConcernUpdate",
    "CoordinationSpec",
    "CostFunction",
    "DcopInstance",
    "LocalConcern",
    "SharedConcern",
    "Solution",
    "SolveStats",
    "StrategySet",
    "Variable",
    "apply_update",
    "audit_privacy",
    "build_pseudo_tree",
    "compile_to_dcop",
    "constraint_graph",
    "evaluate_assignment",
    "load_instance",
    "partition_views",
    "recommend_algorithm",
    "rho",
    "run_coordination_round",
    "run_protocol",
    "solve_dpop",
    "solve_exhaustive",
    "validate_instance",
]
