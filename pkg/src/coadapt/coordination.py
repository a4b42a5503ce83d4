"""Coordination of adaptation planning strategies as a DCOP.

A :class:`CoordinationSpec` holds, for every self-adaptive system (SAS), its
set of candidate strategies, a private local-concern table and the shared
concerns between coordinating sets of SASs, all evaluated at the current
state. :func:`compile_to_dcop` turns local concerns into unary preference
constraints and shared concerns into n-ary consistency constraints.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .dcop import (
    INF,
    Cost,
    CostFunction,
    DcopError,
    DcopInstance,
    DomainViolation,
    MissingBinding,
    Variable,
    Violation,
    format_cost,
    parse_cost,
)
from .dpop import solve_dpop
from .exhaustive import SolveStats, solve_exhaustive


class InvalidSpec(DcopError):
    def __init__(self, violations: Sequence[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class StrategySet:
    sas: str
    strategies: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))


@dataclass(frozen=True)
class LocalConcern:
    sas: str
    cost_table: Mapping[str, Cost]


@dataclass(frozen=True)
class SharedConcern:
    scope: tuple[str, ...]
    cost_table: Mapping[tuple[str, ...], Cost]
    default: Cost | None = None

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "cost_table", {tuple(k): v for k, v in self.cost_table.items()})

    def cost(self, values: tuple[str, ...]) -> Cost:
        if values in self.cost_table:
            return self.cost_table[values]
        if self.default is None:
            raise KeyError(f"shared concern over {self.scope} has no entry for {values}")
        return self.default


@dataclass(frozen=True)
class CoordinationSpec:
    strategy_sets: tuple[StrategySet, ...]
    local_concerns: tuple[LocalConcern, ...] = ()
    shared_concerns: tuple[SharedConcern, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "strategy_sets", tuple(self.strategy_sets))
        object.__setattr__(self, "local_concerns", tuple(self.local_concerns))
        object.__setattr__(self, "shared_concerns", tuple(self.shared_concerns))

    @property
    def sas_ids(self) -> list[str]:
        return [s.sas for s in self.strategy_sets]

    def strategies(self, sas: str) -> tuple[str, ...]:
        for s in self.strategy_sets:
            if s.sas == sas:
                return s.strategies
        raise KeyError(sas)

    def local(self, sas: str) -> LocalConcern | None:
        for c in self.local_concerns:
            if c.sas == sas:
                return c
        return None

    def joint_assignments(self):
        ids = self.sas_ids
        for combo in itertools.product(*(s.strategies for s in self.strategy_sets)):
            yield dict(zip(ids, combo))


def validate_spec(spec: CoordinationSpec) -> list[Violation]:
    report = []
    known: dict[str, tuple[str, ...]] = {}
    for s in spec.strategy_sets:
        if s.sas in known:
            report.append(Violation("DuplicateId", s.sas))
        if not s.strategies:
            report.append(Violation("EmptyDomain", s.sas))
        elif len(set(s.strategies)) != len(s.strategies):
            report.append(Violation("DuplicateValue", s.sas))
        known[s.sas] = s.strategies

    seen_local = set()
    for c in spec.local_concerns:
        if c.sas not in known:
            report.append(Violation("UnknownSas", c.sas))
            continue
        if c.sas in seen_local:
            report.append(Violation("DuplicateLocalConcern", c.sas))
        seen_local.add(c.sas)
        missing = [s for s in known[c.sas] if s not in c.cost_table]
        if missing:
            report.append(Violation("IncompleteTable", c.sas, f"missing {missing}"))
        extra = [s for s in c.cost_table if s not in known[c.sas]]
        if extra:
            report.append(Violation("UnknownStrategy", c.sas, f"{extra}"))
        if any(math.isnan(v) or v < 0 for v in c.cost_table.values()):
            report.append(Violation("NegativeCost", c.sas))

    for i, c in enumerate(spec.shared_concerns):
        name = f"shared[{i}]"
        if len(c.scope) < 2 or len(set(c.scope)) != len(c.scope):
            report.append(Violation("BadScope", name, f"{c.scope}"))
            continue
        unknown = [s for s in c.scope if s not in known]
        if unknown:
            report.extend(Violation("UnknownSas", s, name) for s in unknown)
            continue
        domains = [known[s] for s in c.scope]
        for key, value in c.cost_table.items():
            if len(key) != len(c.scope) or any(k not in d for k, d in zip(key, domains)):
                report.append(Violation("UnknownStrategy", name, f"{key}"))
            elif math.isnan(value) or value < 0:
                report.append(Violation("NegativeCost", name, f"{key}"))
        if c.default is None and any(k not in c.cost_table for k in itertools.product(*domains)):
            report.append(Violation("IncompleteTable", name))
    return report


def ensure_valid_spec(spec: CoordinationSpec) -> None:
    report = validate_spec(spec)
    if report:
        raise InvalidSpec(report)


def rho(spec: CoordinationSpec, candidate: Mapping[str, str]) -> Cost:
    """Coordination objective: local concern costs plus shared concern costs."""
    for s in spec.strategy_sets:
        if s.sas not in candidate:
            raise MissingBinding(s.sas)
        if candidate[s.sas] not in s.strategies:
            raise DomainViolation(s.sas, candidate[s.sas])
    total = 0.0
    for c in spec.local_concerns:
        total += c.cost_table[candidate[c.sas]]
    for c in spec.shared_concerns:
        total += c.cost(tuple(candidate[s] for s in c.scope))
    return total


# -- compilation -------------------------------------------------------------------


def variable_id(sas: str) -> str:
    return f"x_{sas}"


def compile_to_dcop(spec: CoordinationSpec) -> DcopInstance:
    """One agent and one variable per SAS; local concerns become unary
    preference constraints and shared concerns n-ary consistency constraints.

    Constraints follow the order local concerns first, then shared concerns,
    mirroring the objective's two sums.
    """
    ensure_valid_spec(spec)
    variables = [Variable(variable_id(s.sas), s.strategies, s.sas) for s in spec.strategy_sets]
    constraints = []
    for c in spec.local_concerns:
        constraints.append(
            CostFunction(f"f_{c.sas}", (variable_id(c.sas),),
                         {(k,): v for k, v in c.cost_table.items()})
        )
    used: dict[str, int] = {}
    for c in spec.shared_concerns:
        name = "f_" + "_".join(c.scope)
        used[name] = used.get(name, 0) + 1
        if used[name] > 1:
            name = f"{name}#{used[name]}"
        constraints.append(
            CostFunction(name, tuple(variable_id(s) for s in c.scope), dict(c.cost_table),
                         c.default)
        )
    return DcopInstance(spec.sas_ids, variables, constraints)


@dataclass
class RoundResult:
    assignment: dict[str, str]
    cost: Cost
    stats: SolveStats
    feasible: bool


def run_coordination_round(
    spec: CoordinationSpec, algorithm: str = "dpop", fixed: Mapping[str, str] | None = None
) -> RoundResult:
    """Compile, solve and map the optimal DCOP assignment back to strategies.

    ``fixed`` clamps some SASs to one strategy (used by the non-coordinating
    baselines); the rest are optimized over the same objective.
    """
    instance = compile_to_dcop(spec)
    if fixed:
        instance = instance.restricted({variable_id(k): v for k, v in fixed.items()})
    if algorithm == "dpop":
        solution, stats = solve_dpop(instance)
    elif algorithm == "exhaustive":
        stats = SolveStats()
        solution = solve_exhaustive(instance, stats=stats)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    chosen = {sas: solution.assignment[variable_id(sas)] for sas in spec.sas_ids}
    cost = rho(spec, chosen)
    return RoundResult(chosen, cost, stats, not math.isinf(cost))


# -- runtime updates -------------------------------------------------------------


@dataclass(frozen=True)
class ConcernUpdate:
    """Additive deltas for concern entries.

    ``local`` maps sas id -> strategy -> delta; ``shared`` maps the index of a
    shared concern -> joint strategy tuple -> delta.
    """

    local: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    shared: Mapping[int, Mapping[tuple[str, ...], float]] = field(default_factory=dict)


def shift_cost(value: Cost, delta: float) -> Cost:
    """Add ``delta`` to a finite cost and clamp at zero; infinity is left alone."""
    if math.isinf(value):
        return value
    return max(0.0, value + delta)


def apply_update(spec: CoordinationSpec, update: ConcernUpdate) -> CoordinationSpec:
    """Return a new spec with perturbed tables; structure is unchanged."""
    locals_by_sas = {c.sas: c for c in spec.local_concerns}
    for sas in update.local:
        if sas not in locals_by_sas:
            raise KeyError(f"no local concern for {sas!r}")
    for idx in update.shared:
        if not 0 <= idx < len(spec.shared_concerns):
            raise KeyError(f"no shared concern at index {idx}")

    local = []
    for c in spec.local_concerns:
        deltas = update.local.get(c.sas, {})
        for label in deltas:
            if label not in c.cost_table:
                raise KeyError(f"{label!r} is not a strategy of {c.sas!r}")
        local.append(replace(c, cost_table={k: shift_cost(v, deltas.get(k, 0.0))
                                            for k, v in c.cost_table.items()}))

    shared = []
    for i, c in enumerate(spec.shared_concerns):
        deltas = update.shared.get(i, {})
        table = dict(c.cost_table)
        for key, delta in deltas.items():
            key = tuple(key)
            if delta == 0 and key not in table:
                continue
            base = table[key] if key in table else c.cost(key)
            table[key] = shift_cost(base, delta)
        shared.append(replace(c, cost_table=table))
    return replace(spec, local_concerns=tuple(local), shared_concerns=tuple(shared))


def random_update(
    spec: CoordinationSpec,
    magnitude: float,
    rng: np.random.Generator,
    local: bool = True,
    shared: bool = False,
) -> ConcernUpdate:
    """Uniform noise in ``[-magnitude, magnitude]`` for every finite entry."""
    local_deltas: dict[str, dict[str, float]] = {}
    shared_deltas: dict[int, dict[tuple[str, ...], float]] = {}
    if local:
        for c in spec.local_concerns:
            local_deltas[c.sas] = {
                k: float(rng.uniform(-magnitude, magnitude))
                for k, v in c.cost_table.items() if not math.isinf(v)
            }
    if shared:
        for i, c in enumerate(spec.shared_concerns):
            domains = [spec.strategies(s) for s in c.scope]
            shared_deltas[i] = {
                key: float(rng.uniform(-magnitude, magnitude))
                for key in itertools.product(*domains) if not math.isinf(c.cost(key))
            }
    return ConcernUpdate(local_deltas, shared_deltas)


# -- JSON files ------------------------------------------------------------------


def spec_from_dict(raw: Mapping[str, Any]) -> CoordinationSpec:
    try:
        strategy_sets = [StrategySet(s["id"], tuple(s["strategies"])) for s in raw["sas"]]
        local = [
            LocalConcern(c["sas"], {k: parse_cost(v) for k, v in c["costs"].items()})
            for c in raw.get("local_concerns", [])
        ]
        shared = []
        for c in raw.get("shared_concerns", []):
            table = {tuple(e["values"]): parse_cost(e["cost"]) for e in c.get("entries", [])}
            default = c.get("default")
            shared.append(SharedConcern(tuple(c["scope"]), table,
                                        None if default is None else parse_cost(default)))
    except KeyError as exc:
        raise ValueError(f"missing key {exc.args[0]!r} in coordination document") from None
    return CoordinationSpec(strategy_sets, local, shared)


def spec_to_dict(spec: CoordinationSpec) -> dict[str, Any]:
    shared = []
    for c in spec.shared_concerns:
        item: dict[str, Any] = {
            "scope": list(c.scope),
            "entries": [{"values": list(k), "cost": format_cost(v)}
                        for k, v in c.cost_table.items()],
        }
        if c.default is not None:
            item["default"] = format_cost(c.default)
        shared.append(item)
    return {
        "sas": [{"id": s.sas, "strategies": list(s.strategies)} for s in spec.strategy_sets],
        "local_concerns": [
            {"sas": c.sas, "costs": {k: format_cost(v) for k, v in c.cost_table.items()}}
            for c in spec.local_concerns
        ],
        "shared_concerns": shared,
    }


def load_spec(path: str | Path) -> CoordinationSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def dump_spec(spec: CoordinationSpec, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


__all__ = [
    "INF",
    "ConcernUpdate",
    "CoordinationSpec",
    "InvalidSpec",
    "LocalConcern",
    "RoundResult",
    "SharedConcern",
    "StrategySet",
    "apply_update",
    "compile_to_dcop",
    "load_spec",
    "random_update",
    "rho",
    "run_coordination_round",
    "validate_spec",
]
