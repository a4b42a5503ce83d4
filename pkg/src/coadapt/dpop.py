"""DPOP: DFS pseudo-tree, bottom-up UTIL propagation, top-down VALUE propagation.

The per-node steps (:func:`compute_util`, :func:`choose_value`) are shared by
the centralized driver :func:`solve_dpop` and the message-passing runtime in
:mod:`coadapt.runtime`, so both execute the same algorithm.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

from .dcop import (
    ConstraintGraph,
    CostFunction,
    DcopInstance,
    constraint_graph,
    ensure_valid,
    evaluate_assignment,
)
from .exhaustive import Solution, SolveStats


@dataclass(frozen=True)
class PseudoTree:
    root: str
    parent: Mapping[str, str]
    pseudo_parents: Mapping[str, frozenset[str]]
    children: Mapping[str, tuple[str, ...]]
    dfs_order: tuple[str, ...]
    depth: Mapping[str, int]
    separators: Mapping[str, tuple[str, ...]]

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.dfs_order

    @property
    def tree_edges(self) -> list[tuple[str, str]]:
        """(parent, child) pairs in DFS order."""
        return [(self.parent[n], n) for n in self.dfs_order if n in self.parent]

    @property
    def back_edges(self) -> list[tuple[str, str]]:
        """(pseudo-parent, node) pairs."""
        return [(pp, n) for n in self.dfs_order for pp in sorted(self.pseudo_parents[n],
                                                                   key=self.depth.__getitem__)]

    def ancestors(self, node: str) -> list[str]:
        """Ancestors from the root down to the parent."""
        chain = []
        while node in self.parent:
            node = self.parent[node]
            chain.append(node)
        return chain[::-1]


def _pick_root(graph: ConstraintGraph, candidates: Sequence[str]) -> str:
    # max degree; max() keeps the first of equal keys, i.e. declaration order
    return max(candidates, key=graph.degree)


def build_pseudo_tree(
    instance: DcopInstance, root: str | None = None, graph: ConstraintGraph | None = None
) -> PseudoTree:
    """DFS pseudo-tree over the connected component containing ``root``.

    Without a root, the variable of maximal degree is used (ties by declaration
    order). Neighbours are explored in declaration order.
    """
    graph = graph or constraint_graph(instance)
    if root is None:
        root = _pick_root(graph, graph.nodes)
    elif root not in graph.neighbors:
        raise KeyError(f"unknown root variable {root!r}")

    parent: dict[str, str] = {}
    pseudo: dict[str, set[str]] = {}
    children: dict[str, list[str]] = {}
    depth: dict[str, int] = {}
    order: list[str] = []
    on_path: set[str] = set()

    def visit(node: str, d: int) -> None:
        depth[node] = d
        order.append(node)
        pseudo[node] = set()
        children[node] = []
        on_path.add(node)
        for nbr in graph.neighbors[node]:
            if nbr not in depth:
                parent[nbr] = node
                children[node].append(nbr)
                visit(nbr, d + 1)
            elif nbr in on_path and nbr != parent.get(node):
                pseudo[node].add(nbr)
        on_path.discard(node)

    visit(root, 0)

    separators: dict[str, tuple[str, ...]] = {}
    for node in reversed(order):
        sep = set(pseudo[node])
        if node in parent:
            sep.add(parent[node])
        for child in children[node]:
            sep.update(separators[child])
        sep.discard(node)
        separators[node] = tuple(sorted(sep, key=depth.__getitem__))

    return PseudoTree(
        root=root,
        parent=parent,
        pseudo_parents={n: frozenset(p) for n, p in pseudo.items()},
        children={n: tuple(c) for n, c in children.items()},
        dfs_order=tuple(order),
        depth=depth,
        separators=separators,
    )


def pseudo_forest(instance: DcopInstance) -> list[PseudoTree]:
    """One pseudo-tree per connected component, in declaration order."""
    graph = constraint_graph(instance)
    return [build_pseudo_tree(instance, _pick_root(graph, comp), graph)
            for comp in graph.components]


def place_constraints(
    constraints: Sequence[CostFunction], tree: PseudoTree
) -> dict[str, list[CostFunction]]:
    """Assign each constraint to the deepest variable of its scope."""
    placed: dict[str, list[CostFunction]] = {n: [] for n in tree.nodes}
    for f in constraints:
        if not all(v in tree.depth for v in f.scope):
            continue
        placed[max(f.scope, key=tree.depth.__getitem__)].append(f)
    return placed


# -- per-node steps ------------------------------------------------------------


@dataclass(frozen=True)
class UtilTable:
    """A UTIL message: minimal subtree cost for each joint value of ``dims``.

    ``cells`` are in row-major order over ``domains``. The sender's own
    variable never appears in ``dims``; the argmin stays with the sender.
    """

    sender: str
    dims: tuple[str, ...]
    domains: tuple[tuple[str, ...], ...]
    cells: tuple[float, ...]

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def strides(self) -> list[int]:
        out, acc = [], 1
        for dom in reversed(self.domains):
            out.append(acc)
            acc *= len(dom)
        return out[::-1]

    def lookup(self, values: Mapping[str, str]) -> float:
        idx = 0
        for dim, dom, stride in zip(self.dims, self.domains, self.strides()):
            idx += dom.index(values[dim]) * stride
        return self.cells[idx]


@dataclass
class NodeResult:
    util: UtilTable
    argmin: dict[tuple[str, ...], str]


def compute_util(
    variable: str,
    domain: Sequence[str],
    separator: Sequence[str],
    separator_domains: Mapping[str, Sequence[str]],
    constraints: Sequence[CostFunction],
    child_utils: Sequence[UtilTable],
    stats: SolveStats | None = None,
) -> NodeResult:
    """Join local constraints with children's UTIL tables and project out ``variable``.

    For each joint value of the separator, the own value with the smallest
    total wins; ties go to the earlier domain value.
    """
    sep = tuple(separator)
    sep_domains = tuple(tuple(separator_domains[v]) for v in sep)
    scopes = [(f, f.scope) for f in constraints]
    cells: list[float] = []
    argmin: dict[tuple[str, ...], str] = {}
    evaluations = 0
    for sep_values in itertools.product(*sep_domains):
        context = dict(zip(sep, sep_values))
        best_value, best_cost = domain[0], math.inf
        first = True
        for value in domain:
            context[variable] = value
            total = 0.0
            for f, scope in scopes:
                total += f.cost(tuple(context[v] for v in scope))
            evaluations += len(scopes)
            for msg in child_utils:
                total += msg.lookup(context)
            if first or total < best_cost:
                best_value, best_cost = value, total
                first = False
        cells.append(best_cost)
        argmin[sep_values] = best_value
    if stats is not None:
        stats.constraint_evaluations += evaluations
    return NodeResult(UtilTable(variable, sep, sep_domains, tuple(cells)), argmin)


def choose_value(
    argmin: Mapping[tuple[str, ...], str], separator: Sequence[str], context: Mapping[str, str]
) -> str:
    return argmin[tuple(context[v] for v in separator)]


# -- centralized driver ----------------------------------------------------------


def solve_dpop(instance: DcopInstance) -> tuple[Solution, SolveStats]:
    """Solve with DPOP, each connected component on its own pseudo-tree."""
    ensure_valid(instance)
    started = time.perf_counter()
    stats = SolveStats()
    assignment: dict[str, str] = {}
    for tree in pseudo_forest(instance):
        assignment.update(_solve_tree(instance, tree, stats))
    ordered = {v: assignment[v] for v in instance.variable_ids}
    stats.wall_time = time.perf_counter() - started
    return Solution.of(ordered, evaluate_assignment(instance, ordered)), stats


def _solve_tree(instance: DcopInstance, tree: PseudoTree, stats: SolveStats) -> dict[str, str]:
    placed = place_constraints(instance.constraints, tree)
    results: dict[str, NodeResult] = {}
    for node in reversed(tree.dfs_order):
        sep = tree.separators[node]
        result = compute_util(
            node,
            instance.domain(node),
            sep,
            {v: instance.domain(v) for v in sep},
            placed[node],
            [results[c].util for c in tree.children[node]],
            stats,
        )
        results[node] = result
        if node != tree.root:
            stats.message_count += 1
            stats.util_cells += result.util.cell_count

    values: dict[str, str] = {}
    for node in tree.dfs_order:
        sep = tree.separators[node]
        if node != tree.root:
            stats.message_count += 1
            stats.value_bindings += len(sep)
        values[node] = choose_value(results[node].argmin, sep, values)
    return values


def recommend_algorithm(graph: ConstraintGraph, memory_limited: bool = False) -> str:
    """Advisory label: inference (``"dpop"``) for acyclic graphs with memory to spare."""
    if memory_limited or graph.cycle_count > 0:
        return "search-based"
    return "dpop"
