"""In-process message-passing network running DPOP between agents.

Each agent sees only its own variable, its private (unary) constraints and
the shared constraints it participates in. Messages travel over FIFO
channels; a round-robin scheduler visits agents in pseudo-tree DFS order, so
the transcript is identical on every run.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .dcop import CostFunction, DcopInstance, ensure_valid, format_cost, parse_cost
from .dpop import PseudoTree, UtilTable, choose_value, compute_util
from .exhaustive import Solution, SolveStats

UTIL = "UTIL"
VALUE = "VALUE"


@dataclass(frozen=True)
class AgentView:
    agent: str
    variable: str
    domain: tuple[str, ...]
    private_constraints: tuple[CostFunction, ...]
    shared_constraints: tuple[CostFunction, ...]
    neighbors: tuple[str, ...]
    # variable -> owning agent / domain for every variable co-scoped with ours
    known_owners: Mapping[str, str] = field(default_factory=dict)
    known_domains: Mapping[str, tuple[str, ...]] = field(default_factory=dict)


def partition_views(instance: DcopInstance) -> list[AgentView]:
    """Split an instance into per-agent views; each constraint goes to the agents in its scope."""
    ensure_valid(instance)
    views = []
    for var in instance.variables:
        private = tuple(f for f in instance.constraints if f.scope == (var.id,))
        shared = tuple(f for f in instance.constraints if var.id in f.scope and f.arity > 1)
        co_scoped = []
        for f in shared:
            for v in f.scope:
                if v != var.id and v not in co_scoped:
                    co_scoped.append(v)
        co_scoped.sort(key=instance.variable_ids.index)
        owners = {v: instance.variable(v).owner for v in co_scoped}
        owners[var.id] = var.owner
        domains = {v: instance.domain(v) for v in co_scoped}
        domains[var.id] = var.domain
        views.append(
            AgentView(
                agent=var.owner,
                variable=var.id,
                domain=var.domain,
                private_constraints=private,
                shared_constraints=shared,
                neighbors=tuple(owners[v] for v in co_scoped),
                known_owners=owners,
                known_domains=domains,
            )
        )
    return views


@dataclass(frozen=True)
class TranscriptRecord:
    seq: int
    sender: str
    receiver: str
    kind: str
    dims: tuple[str, ...]
    cell_count: int
    payload: Any

    def as_dict(self) -> dict[str, Any]:
        payload = self.payload
        if self.kind == UTIL:
            payload = {
                "domains": [list(d) for d in payload["domains"]],
                "cells": [format_cost(c) for c in payload["cells"]],
            }
        return {
            "seq": self.seq,
            "from": self.sender,
            "to": self.receiver,
            "kind": self.kind,
            "dims": list(self.dims),
            "cell_count": self.cell_count,
            "payload": payload,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "TranscriptRecord":
        payload = raw["payload"]
        if raw["kind"] == UTIL:
            payload = {
                "domains": [tuple(d) for d in payload["domains"]],
                "cells": [parse_cost(c) for c in payload["cells"]],
            }
        return cls(raw["seq"], raw["from"], raw["to"], raw["kind"], tuple(raw["dims"]),
                   raw["cell_count"], payload)


class Transcript(list):
    """Ordered list of :class:`TranscriptRecord`."""

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.as_dict(), sort_keys=True) + "\n" for r in self)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        return cls(TranscriptRecord.from_dict(json.loads(line))
                   for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    kind: str
    body: Any


class Network:
    """FIFO channels between agents; every send is recorded in the transcript."""

    def __init__(self, agent_order: Sequence[str]):
        self._rank = {a: i for i, a in enumerate(agent_order)}
        self._channels: dict[tuple[str, str], deque[Message]] = {}
        self.transcript = Transcript()

    def send(self, msg: Message, dims: Sequence[str], cell_count: int, payload: Any) -> None:
        self._channels.setdefault((msg.sender, msg.receiver), deque()).append(msg)
        self.transcript.append(
            TranscriptRecord(len(self.transcript), msg.sender, msg.receiver, msg.kind,
                             tuple(dims), cell_count, payload)
        )

    def drain(self, receiver: str) -> list[Message]:
        inbound = sorted((k for k in self._channels if k[1] == receiver and self._channels[k]),
                         key=lambda k: self._rank[k[0]])
        out = []
        for key in inbound:
            queue = self._channels[key]
            while queue:
                out.append(queue.popleft())
        return out

    @property
    def idle(self) -> bool:
        return not any(self._channels.values())


class Agent:
    def __init__(self, view: AgentView, tree: PseudoTree, owner_of: Mapping[str, str]):
        self.view = view
        self.var = view.variable
        self.depth = tree.depth
        self.parent_var = tree.parent.get(self.var)
        self.child_vars = list(tree.children[self.var])
        self.owner_of = owner_of
        own = [*view.private_constraints, *view.shared_constraints]
        # a constraint is handled by the deepest variable of its scope
        self.local = [f for f in own if max(f.scope, key=self.depth.__getitem__) == self.var]
        self.pseudo_parents = set(tree.pseudo_parents[self.var])
        self.child_utils: dict[str, UtilTable] = {}
        self.separator: tuple[str, ...] | None = None
        self.argmin: dict[tuple[str, ...], str] | None = None
        self.value: str | None = None
        self.context: dict[str, str] = {}
        self.util_sent = False

    def step(self, inbox: Iterable[Message], net: Network, stats: SolveStats) -> None:
        for msg in inbox:
            if msg.kind == UTIL:
                self.child_utils[msg.body.sender] = msg.body
            else:
                self.context.update(msg.body)
                self._decide(net, stats)
        if not self.util_sent and len(self.child_utils) == len(self.child_vars):
            self._send_util(net, stats)
            if self.parent_var is None:
                self._decide(net, stats)

    def _send_util(self, net: Network, stats: SolveStats) -> None:
        sep = set(self.pseudo_parents)
        if self.parent_var is not None:
            sep.add(self.parent_var)
        domains = dict(self.view.known_domains)
        for util in self.child_utils.values():
            sep.update(util.dims)
            domains.update(zip(util.dims, util.domains))
        sep.discard(self.var)
        self.separator = tuple(sorted(sep, key=self.depth.__getitem__))
        result = compute_util(
            self.var,
            self.view.domain,
            self.separator,
            domains,
            self.local,
            [self.child_utils[c] for c in self.child_vars],
            stats,
        )
        self.argmin = result.argmin
        self.util_sent = True
        if self.parent_var is not None:
            util = result.util
            stats.message_count += 1
            stats.util_cells += util.cell_count
            net.send(
                Message(self.view.agent, self.owner_of[self.parent_var], UTIL, util),
                util.dims,
                util.cell_count,
                {"domains": [tuple(d) for d in util.domains], "cells": list(util.cells)},
            )

    def _decide(self, net: Network, stats: SolveStats) -> None:
        self.value = choose_value(self.argmin, self.separator, self.context)
        known = {**self.context, self.var: self.value}
        for child in self.child_vars:
            child_sep = self.child_utils[child].dims
            bindings = {v: known[v] for v in child_sep}
            stats.message_count += 1
            stats.value_bindings += len(bindings)
            net.send(Message(self.view.agent, self.owner_of[child], VALUE, bindings),
                     list(bindings), len(bindings), dict(bindings))


def run_protocol(
    views: Sequence[AgentView], trees: PseudoTree | Sequence[PseudoTree]
) -> tuple[Solution, SolveStats, Transcript]:
    """Run DPOP as a message protocol between the agents owning ``views``."""
    if isinstance(trees, PseudoTree):
        trees = [trees]
    started = time.perf_counter()
    by_var = {v.variable: v for v in views}
    owner_of = {v.variable: v.agent for v in views}
    stats = SolveStats()
    order = [n for t in trees for n in t.dfs_order]
    agents = {}
    for tree in trees:
        for var in tree.dfs_order:
            agents[var] = Agent(by_var[var], tree, owner_of)
    net = Network([owner_of[v] for v in order])
    by_agent = {owner_of[v]: agents[v] for v in order}

    while True:
        progressed = False
        for var in order:
            agent = agents[var]
            before = (agent.util_sent, agent.value)
            agent.step(net.drain(agent.view.agent), net, stats)
            progressed |= before != (agent.util_sent, agent.value)
        if not progressed and net.idle:
            break

    missing = [v for v in order if agents[v].value is None]
    if missing:
        raise RuntimeError(f"protocol ended without values for {missing}")

    assignment = {v.variable: agents[v.variable].value for v in views}
    cost = 0.0
    for agent in by_agent.values():
        for f in agent.local:
            cost += f.cost_at(assignment)
    stats.wall_time = time.perf_counter() - started
    return Solution(assignment, cost, not math.isinf(cost)), stats, net.transcript


# -- privacy audit -------------------------------------------------------------


@dataclass(frozen=True)
class PrivacyFinding:
    kind: str
    seq: int
    detail: str


@dataclass(frozen=True)
class PrivacyAudit:
    findings: tuple[PrivacyFinding, ...]

    @property
    def passed(self) -> bool:
        return not self.findings

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}


def _private_table(view: AgentView) -> list[float]:
    cells = []
    for value in view.domain:
        cells.append(sum(f.cost((value,)) for f in view.private_constraints))
    return cells


def audit_privacy(transcript: Iterable[TranscriptRecord], views: Sequence[AgentView]) -> PrivacyAudit:
    """Check that no UTIL payload exposes the sender's variable or a raw private table.

    Two rules:

    * ``SeparatorViolation``: a UTIL message indexed by the sender's own
      variable.
    * ``RawTableDisclosure``: a UTIL payload whose only dimension is some
      agent's variable and whose cells equal that agent's private table, sent
      to anyone but that agent (an agent may legitimately receive tables over
      its own variable).
    """
    own_var = {v.agent: v.variable for v in views}
    raw = {v.variable: (v.agent, _private_table(v)) for v in views if v.private_constraints}
    findings = []
    for rec in transcript:
        if rec.kind != UTIL:
            continue
        if own_var.get(rec.sender) in rec.dims:
            findings.append(PrivacyFinding("SeparatorViolation", rec.seq,
                                           f"{rec.sender} sent a table over its own variable"))
        if len(rec.dims) == 1 and rec.dims[0] in raw:
            holder, table = raw[rec.dims[0]]
            if holder != rec.receiver and list(rec.payload["cells"]) == table:
                findings.append(PrivacyFinding("RawTableDisclosure", rec.seq,
                                               f"private table of {holder} sent to {rec.receiver}"))
    return PrivacyAudit(tuple(findings))
