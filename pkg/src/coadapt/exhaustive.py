"""Brute-force enumeration, the ground truth every other solver is checked against."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Mapping

from .dcop import Cost, DcopError, DcopInstance, ensure_valid

DEFAULT_CAP = 10**7


class SearchSpaceTooLarge(DcopError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"search space of {size} assignments exceeds cap {cap}")
        self.size = size
        self.cap = cap


@dataclass(frozen=True)
class Solution:
    assignment: Mapping[str, str]
    cost: Cost
    feasible: bool = field(default=True)

    @classmethod
    def of(cls, assignment: Mapping[str, str], cost: Cost) -> "Solution":
        return cls(dict(assignment), cost, not math.isinf(cost))


@dataclass
class SolveStats:
    """Deterministic work counters plus wall time (never asserted on)."""

    message_count: int = 0
    util_cells: int = 0
    value_bindings: int = 0
    constraint_evaluations: int = 0
    wall_time: float = 0.0

    @property
    def total_payload_cells(self) -> int:
        return self.util_cells + self.value_bindings

    def as_dict(self) -> dict:
        return {
            "message_count": self.message_count,
            "util_cells": self.util_cells,
            "value_bindings": self.value_bindings,
            "total_payload_cells": self.total_payload_cells,
            "constraint_evaluations": self.constraint_evaluations,
            "wall_time": self.wall_time,
        }


def solve_exhaustive(
    instance: DcopInstance, cap: int = DEFAULT_CAP, stats: SolveStats | None = None
) -> Solution:
    """Enumerate every complete assignment and keep the first strict minimum.

    Enumeration runs in lexicographic order (variables, then domain values, in
    declaration order), so ties go to the lexicographically first assignment.
    If every assignment costs infinity, that first assignment is returned with
    ``feasible=False``.
    """
    ensure_valid(instance)
    size = instance.search_space_size()
    if size > cap:
        raise SearchSpaceTooLarge(size, cap)

    started = time.perf_counter()
    ids = instance.variable_ids
    position = {v: i for i, v in enumerate(ids)}
    scopes = [(f, [position[v] for v in f.scope]) for f in instance.constraints]

    best_values = None
    best_cost = math.inf
    evaluations = 0
    for values in itertools.product(*(v.domain for v in instance.variables)):
        total = 0.0
        for f, idx in scopes:
            total += f.cost(tuple(values[i] for i in idx))
        evaluations += len(scopes)
        if best_values is None or total < best_cost:
            best_values, best_cost = values, total

    if stats is not None:
        stats.constraint_evaluations += evaluations
        stats.wall_time += time.perf_counter() - started
    return Solution.of(dict(zip(ids, best_values)), best_cost)
