import numpy as np
import pytest

from coadapt.dcop import INF, CostFunction, DcopInstance, InvalidInstance, Variable, assignments, evaluate_assignment
from coadapt.exhaustive import SearchSpaceTooLarge, SolveStats, solve_exhaustive
from generators import brute_force, random_instance


def test_videoservice(videoservice):
    sol = solve_exhaustive(videoservice)
    assert sol.assignment == {"x_SV1": "A-2", "x_SV2": "B-1"}
    assert sol.cost == 15
    assert sol.feasible


def test_unary_minimum():
    inst = DcopInstance(["a"], [Variable("x", ("a", "b"), "a")],
                        [CostFunction("f", ("x",), {("a",): 3, ("b",): 1})])
    sol = solve_exhaustive(inst)
    assert sol.assignment == {"x": "b"}
    assert sol.cost == 1


def test_lexicographic_tie_break():
    vs = [Variable("x", ("u", "v"), "a"), Variable("y", ("u", "v"), "b")]
    inst = DcopInstance(["a", "b"], vs, [CostFunction("f", ("x", "y"), {}, default=0)])
    sol = solve_exhaustive(inst)
    assert sol.assignment == {"x": "u", "y": "u"}
    assert sol.cost == 0


def test_all_infinite_is_flagged():
    vs = [Variable("x", ("p", "q"), "a"), Variable("y", ("r", "s"), "b")]
    inst = DcopInstance(["a", "b"], vs, [CostFunction("f", ("x", "y"), {}, default=INF)])
    sol = solve_exhaustive(inst)
    assert not sol.feasible
    assert sol.cost == INF
    assert sol.assignment == {"x": "p", "y": "r"}


def test_cap():
    vs = [Variable(f"x{i}", tuple("abcdefghij"), f"a{i}") for i in range(4)]
    inst = DcopInstance([v.owner for v in vs], vs, [])
    with pytest.raises(SearchSpaceTooLarge):
        solve_exhaustive(inst, cap=9999)
    assert solve_exhaustive(inst, cap=10_000).cost == 0


def test_rejects_invalid_instance():
    inst = DcopInstance(["a"], [Variable("x", ("p",), "a")],
                        [CostFunction("f", ("x", "nope"), {}, 0)])
    with pytest.raises(InvalidInstance):
        solve_exhaustive(inst)


def test_counts_evaluations(videoservice):
    stats = SolveStats()
    solve_exhaustive(videoservice, stats=stats)
    assert stats.constraint_evaluations == 4 * 3


@pytest.mark.parametrize("seed", range(40))
def test_optimal_against_enumeration(seed):
    inst = random_instance(np.random.default_rng(seed))
    assert inst.search_space_size() <= 10**4
    sol = solve_exhaustive(inst)
    best, argmins = brute_force(inst)
    assert sol.cost == best
    # first minimizer in enumeration order is the lexicographic tie-break
    assert sol.assignment == argmins[0]
    assert sol.cost == evaluate_assignment(inst, sol.assignment)
    assert all(evaluate_assignment(inst, d) >= sol.cost for d in assignments(inst))


def test_deterministic():
    inst = random_instance(np.random.default_rng(7))
    assert solve_exhaustive(inst) == solve_exhaustive(inst)
