"""DCOP instances, assignments, cost arithmetic and constraint-graph analysis.

Costs are plain floats in ``[0, inf]``.  Because no cost is ever negative,
IEEE addition already saturates: ``inf + x == inf`` for every admissible ``x``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

INF = math.inf

Cost = float
Assignment = Mapping[str, str]


class DcopError(Exception):
    """Base class for errors raised by the DCOP toolkit."""


class MissingBinding(DcopError):
    def __init__(self, variable: str):
        super().__init__(f"assignment does not bind variable {variable!r}")
        self.variable = variable


class DomainViolation(DcopError):
    def __init__(self, variable: str, value: Any):
        super().__init__(f"value {value!r} is not in the domain of {variable!r}")
        self.variable = variable
        self.value = value


class InvalidInstance(DcopError):
    """Raised when an operation requires a valid instance and gets a broken one."""

    def __init__(self, violations: Sequence["Violation"]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)


def parse_cost(raw: Any) -> Cost:
    if isinstance(raw, str):
        if raw.strip().lower() in ("inf", "infinity", "+inf"):
            return INF
        raise ValueError(f"unrecognized cost {raw!r}")
    value = float(raw)
    if math.isnan(value):
        raise ValueError("cost must not be NaN")
    return value


def format_cost(cost: Cost) -> float | str:
    """JSON-friendly cost: numbers stay numbers, infinity becomes ``"inf"``."""
    if math.isinf(cost):
        return "inf"
    if float(cost).is_integer():
        return int(cost)
    return cost


@dataclass(frozen=True)
class Variable:
    id: str
    domain: tuple[str, ...]
    owner: str

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))


@dataclass(frozen=True)
class CostFunction:
    """A cost table over the Cartesian product of its scope's domains.

    ``table`` keys are value tuples aligned with ``scope``.  Missing keys fall
    back to ``default``; with no default, a missing key is a validation error.
    """

    id: str
    scope: tuple[str, ...]
    table: Mapping[tuple[str, ...], Cost]
    default: Cost | None = None

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "table", {tuple(k): float(v) for k, v in self.table.items()})

    @property
    def arity(self) -> int:
        return len(self.scope)

    def cost(self, values: tuple[str, ...]) -> Cost:
        try:
            return self.table[values]
        except KeyError:
            if self.default is None:
                raise KeyError(f"constraint {self.id!r} has no entry for {values!r}") from None
            return self.default

    def cost_at(self, delta: Assignment) -> Cost:
        return self.cost(tuple(delta[v] for v in self.scope))


@dataclass(frozen=True)
class DcopInstance:
    agents: tuple[str, ...]
    variables: tuple[Variable, ...]
    constraints: tuple[CostFunction, ...]
    _index: dict[str, Variable] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "_index", {v.id: v for v in self.variables})

    def variable(self, var_id: str) -> Variable:
        return self._index[var_id]

    def has_variable(self, var_id: str) -> bool:
        return var_id in self._index

    @property
    def variable_ids(self) -> list[str]:
        return [v.id for v in self.variables]

    def domain(self, var_id: str) -> tuple[str, ...]:
        return self._index[var_id].domain

    def search_space_size(self) -> int:
        return math.prod(len(v.domain) for v in self.variables)

    def restricted(self, fixed: Mapping[str, str]) -> "DcopInstance":
        """Copy of the instance with each variable in ``fixed`` clamped to one value.

        Table entries for the removed values are dropped as well.
        """
        unknown = set(fixed) - set(self._index)
        if unknown:
            raise MissingBinding(sorted(unknown)[0])
        variables = []
        for v in self.variables:
            if v.id in fixed:
                if fixed[v.id] not in v.domain:
                    raise DomainViolation(v.id, fixed[v.id])
                v = Variable(v.id, (fixed[v.id],), v.owner)
            variables.append(v)
        constraints = []
        for f in self.constraints:
            keep = [i for i, var in enumerate(f.scope) if var in fixed]
            if keep:
                table = {k: c for k, c in f.table.items()
                         if all(k[i] == fixed[f.scope[i]] for i in keep)}
                f = CostFunction(f.id, f.scope, table, f.default)
            constraints.append(f)
        return DcopInstance(self.agents, variables, constraints)


def check_assignment(instance: DcopInstance, delta: Assignment) -> None:
    for var in instance.variables:
        if var.id not in delta:
            raise MissingBinding(var.id)
        if delta[var.id] not in var.domain:
            raise DomainViolation(var.id, delta[var.id])


def evaluate_assignment(instance: DcopInstance, delta: Assignment) -> Cost:
    """Objective value of a complete assignment: the sum of every constraint."""
    check_assignment(instance, delta)
    total = 0.0
    for f in instance.constraints:
        total += f.cost_at(delta)
    return total


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    detail: str = ""

    def __str__(self):
        text = f"{self.kind}({self.subject!r})"
        return f"{text}: {self.detail}" if self.detail else text


def validate_instance(instance: DcopInstance) -> list[Violation]:
    """Return every invariant violation; an empty list means the instance is valid."""
    report: list[Violation] = []
    agents = set(instance.agents)
    if len(agents) != len(instance.agents):
        report.append(Violation("DuplicateId", "agents", "agent ids repeat"))

    seen: set[str] = set()
    owners: dict[str, str] = {}
    for var in instance.variables:
        if var.id in seen:
            report.append(Violation("DuplicateId", var.id, "variable declared twice"))
        seen.add(var.id)
        if not var.domain:
            report.append(Violation("EmptyDomain", var.id))
        elif len(set(var.domain)) != len(var.domain):
            report.append(Violation("DuplicateValue", var.id))
        if var.owner not in agents:
            report.append(Violation("UnknownAgent", var.owner, f"owner of {var.id}"))
        if var.owner in owners:
            report.append(
                Violation("OwnershipViolation", var.owner,
                          f"owns both {owners[var.owner]} and {var.id}")
            )
        else:
            owners[var.owner] = var.id

    seen_constraints: set[str] = set()
    for f in instance.constraints:
        if f.id in seen_constraints:
            report.append(Violation("DuplicateId", f.id, "constraint declared twice"))
        seen_constraints.add(f.id)
        if not f.scope:
            report.append(Violation("EmptyScope", f.id))
            continue
        if len(set(f.scope)) != len(f.scope):
            report.append(Violation("DuplicateScope", f.id))
        unknown = [v for v in f.scope if not instance.has_variable(v)]
        for v in unknown:
            report.append(Violation("UnknownVariable", v, f"in scope of {f.id}"))
        if unknown:
            continue
        domains = [instance.domain(v) for v in f.scope]
        for key, cost in f.table.items():
            if len(key) != len(f.scope) or any(val not in dom for val, dom in zip(key, domains)):
                report.append(Violation("EntryOutOfDomain", f.id, repr(key)))
            elif math.isnan(cost) or cost < 0:
                report.append(Violation("NegativeCost", f.id, repr(key)))
        if f.default is not None and (math.isnan(f.default) or f.default < 0):
            report.append(Violation("NegativeCost", f.id, "default"))
        if f.default is None:
            missing = sum(1 for key in itertools.product(*domains) if key not in f.table)
            if missing:
                report.append(Violation("IncompleteTable", f.id, f"{missing} entries missing"))
    return report


def ensure_valid(instance: DcopInstance) -> None:
    report = validate_instance(instance)
    if report:
        raise InvalidInstance(report)


# -- constraint graph ---------------------------------------------------------


@dataclass(frozen=True)
class ConstraintGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    neighbors: Mapping[str, tuple[str, ...]]
    components: tuple[tuple[str, ...], ...]

    @property
    def cycle_count(self) -> int:
        return len(self.edges) - len(self.nodes) + len(self.components)

    def degree(self, node: str) -> int:
        return len(self.neighbors[node])


def constraint_graph(instance: DcopInstance) -> ConstraintGraph:
    order = {v: i for i, v in enumerate(instance.variable_ids)}
    adjacency: dict[str, set[str]] = {v: set() for v in order}
    edges: dict[tuple[str, str], None] = {}
    for f in instance.constraints:
        for u, v in itertools.combinations(f.scope, 2):
            if order[u] > order[v]:
                u, v = v, u
            edges[(u, v)] = None
            adjacency[u].add(v)
            adjacency[v].add(u)
    neighbors = {v: tuple(sorted(adj, key=order.__getitem__)) for v, adj in adjacency.items()}

    components = []
    seen: set[str] = set()
    for start in order:
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nxt in neighbors[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        components.append(tuple(sorted(comp, key=order.__getitem__)))

    return ConstraintGraph(
        nodes=tuple(order),
        edges=tuple(sorted(edges, key=lambda e: (order[e[0]], order[e[1]]))),
        neighbors=neighbors,
        components=tuple(components),
    )


# -- JSON problem files --------------------------------------------------------


def constraint_from_dict(raw: Mapping[str, Any]) -> CostFunction:
    scope = tuple(raw["scope"])
    table = {}
    for entry in raw.get("entries", []):
        values = tuple(entry["values"])
        if len(values) != len(scope):
            raise ValueError(f"constraint {raw['id']!r}: entry {values!r} does not match scope")
        table[values] = parse_cost(entry["cost"])
    default = raw.get("default")
    return CostFunction(
        id=raw["id"],
        scope=scope,
        table=table,
        default=None if default is None else parse_cost(default),
    )


def constraint_to_dict(f: CostFunction) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": f.id,
        "scope": list(f.scope),
        "entries": [{"values": list(k), "cost": format_cost(c)} for k, c in f.table.items()],
    }
    if f.default is not None:
        out["default"] = format_cost(f.default)
    return out


def instance_from_dict(raw: Mapping[str, Any]) -> DcopInstance:
    try:
        return DcopInstance(
            agents=tuple(raw["agents"]),
            variables=tuple(
                Variable(v["id"], tuple(v["domain"]), v["owner"]) for v in raw["variables"]
            ),
            constraints=tuple(constraint_from_dict(c) for c in raw.get("constraints", [])),
        )
    except KeyError as exc:
        raise ValueError(f"missing key {exc.args[0]!r} in DCOP document") from None


def instance_to_dict(instance: DcopInstance) -> dict[str, Any]:
    return {
        "agents": list(instance.agents),
        "variables": [
            {"id": v.id, "domain": list(v.domain), "owner": v.owner} for v in instance.variables
        ],
        "constraints": [constraint_to_dict(f) for f in instance.constraints],
    }


def load_instance(path: str | Path) -> DcopInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def dump_instance(instance: DcopInstance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def assignments(instance: DcopInstance) -> Iterable[dict[str, str]]:
    """Every complete assignment, in lexicographic declaration order."""
    ids = instance.variable_ids
    for values in itertools.product(*(v.domain for v in instance.variables)):
        yield dict(zip(ids, values))
