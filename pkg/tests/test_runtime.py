import dataclasses

import numpy as np
import pytest

from coadapt.dpop import build_pseudo_tree, pseudo_forest, solve_dpop
from coadapt.runtime import (
    Transcript,
    TranscriptRecord,
    audit_privacy,
    partition_views,
    run_protocol,
)
from coadapt.simdex import SimdexParams, build_simdex_concerns
from coadapt.coordination import compile_to_dcop
from coadapt.dcop import DcopInstance, Variable, CostFunction
from generators import random_instance, star_instance


def _run(instance):
    views = partition_views(instance)
    return views, run_protocol(views, pseudo_forest(instance))


def test_videoservice_views(videoservice):
    views = {v.agent: v for v in partition_views(videoservice)}
    assert [f.id for f in views["SV1"].private_constraints] == ["f_SV1"]
    assert [f.id for f in views["SV1"].shared_constraints] == ["f_SV1_SV2"]
    assert views["SV1"].neighbors == ("SV2",)
    # SV1 never sees SV2's private table
    assert all(f.id != "f_SV2" for f in views["SV1"].private_constraints + views["SV1"].shared_constraints)


def test_simdex_infra_view():
    inst = compile_to_dcop(build_simdex_concerns(SimdexParams(), np.random.default_rng(0)))
    infra = next(v for v in partition_views(inst) if v.agent == "I")
    assert len(infra.private_constraints) == 0
    assert len(infra.shared_constraints) == 5
    assert len(infra.neighbors) == 5


def test_single_agent():
    inst = DcopInstance(["a"], [Variable("x", ("p", "q"), "a")],
                        [CostFunction("f", ("x",), {("p",): 2, ("q",): 1})])
    views, (sol, stats, transcript) = _run(inst)
    assert sol.assignment == {"x": "q"}
    assert sol.cost == 1
    assert len(transcript) == 0
    assert stats.message_count == 0


def test_videoservice_transcript(videoservice):
    views, (sol, _, transcript) = _run(videoservice)
    assert sol.assignment == {"x_SV1": "A-2", "x_SV2": "B-1"}
    assert sol.cost == 15
    util, value = transcript
    assert (util.sender, util.receiver, util.kind, util.dims) == ("SV2", "SV1", "UTIL", ("x_SV1",))
    assert util.payload["cells"] == [15, 15]
    assert (value.sender, value.receiver, value.kind) == ("SV1", "SV2", "VALUE")
    assert value.payload == {"x_SV1": "A-2"}
    assert audit_privacy(transcript, views).passed


def test_star_record_count():
    _, (_, _, transcript) = _run(star_instance(10, 3, 2))
    assert len(transcript) == 20
    assert sum(r.kind == "UTIL" for r in transcript) == 10


@pytest.mark.parametrize("seed", range(60))
def test_matches_centralized_dpop(seed):
    inst = random_instance(np.random.default_rng(seed))
    _, (sol, stats, transcript) = _run(inst)
    ref, ref_stats = solve_dpop(inst)
    assert sol.assignment == ref.assignment
    assert sol.cost == ref.cost
    assert stats.message_count == ref_stats.message_count == len(transcript)
    assert stats.util_cells == ref_stats.util_cells
    assert stats.value_bindings == ref_stats.value_bindings


def test_transcript_deterministic():
    inst = random_instance(np.random.default_rng(11), n_vars=6, topology="cycle")
    a = _run(inst)[1][2]
    b = _run(inst)[1][2]
    assert a.to_jsonl() == b.to_jsonl()


@pytest.mark.parametrize("seed", range(20))
def test_causal_order(seed):
    inst = random_instance(np.random.default_rng(300 + seed))
    _, (_, _, transcript) = _run(inst)
    util_sent = {}
    for rec in transcript:
        if rec.kind == "UTIL":
            util_sent[rec.sender] = rec.seq
    # a VALUE to an agent always follows that agent's UTIL
    for rec in transcript:
        if rec.kind == "VALUE":
            assert util_sent[rec.receiver] < rec.seq
    # every non-root agent sends exactly one UTIL
    assert len(util_sent) == sum(1 for r in transcript if r.kind == "UTIL")


@pytest.mark.parametrize("seed", range(100))
def test_audit_passes_on_random_instances(seed):
    inst = random_instance(np.random.default_rng(7000 + seed))
    views, (_, _, transcript) = _run(inst)
    audit = audit_privacy(transcript, views)
    assert audit.passed, audit.findings


def test_audit_flags_own_variable(videoservice):
    views, (_, _, transcript) = _run(videoservice)
    util = transcript[0]
    bad = dataclasses.replace(util, dims=("x_SV2",))
    audit = audit_privacy(Transcript([bad]), views)
    assert "SeparatorViolation" in audit.kinds()


def test_audit_flags_raw_table(videoservice):
    views = partition_views(videoservice)
    leak = TranscriptRecord(0, "SV1", "SV1x", "UTIL", ("x_SV2",), 2,
                            {"domains": [("B-1", "B-2")], "cells": [15.0, 0.0]})
    assert "RawTableDisclosure" in audit_privacy([leak], views).kinds()


def test_audit_empty_transcript(videoservice):
    assert audit_privacy(Transcript(), partition_views(videoservice)).passed


def test_jsonl_round_trip(tmp_path, videoservice):
    _, (_, _, transcript) = _run(videoservice)
    path = tmp_path / "t.jsonl"
    transcript.write(path)
    again = Transcript.from_jsonl(path.read_text())
    assert again == transcript
    assert again.to_jsonl() == transcript.to_jsonl()


def test_single_tree_argument(videoservice):
    views = partition_views(videoservice)
    sol, _, _ = run_protocol(views, build_pseudo_tree(videoservice))
    assert sol.cost == 15
