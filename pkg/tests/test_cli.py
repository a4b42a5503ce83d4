import json
import subprocess
import sys
from pathlib import Path

import pytest

from coadapt.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, main
from coadapt.runtime import Transcript, audit_privacy, partition_views
from coadapt import data
from coadapt.dcop import load_instance

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.mark.parametrize("algorithm", ["dpop", "exhaustive"])
def test_solve_bundled_example(capsys, algorithm):
    assert main(["solve", "--input", "videoservice.json", "--algorithm", algorithm]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["assignment"] == {"x_SV1": "A-2", "x_SV2": "B-1"}
    assert out["cost"] == 15


def test_solve_writes_stats_and_transcript(tmp_path):
    sol, stats, tr = tmp_path / "sol.json", tmp_path / "stats.json", tmp_path / "t.jsonl"
    code = main(["solve", "--input", str(data.path("videoservice.json")), "--output", str(sol),
                 "--stats", str(stats), "--transcript", str(tr)])
    assert code == EXIT_OK
    assert json.loads(sol.read_text())["feasible"] is True
    s = json.loads(stats.read_text())
    assert s["message_count"] == 2
    assert s["total_payload_cells"] == s["util_cells"] + s["value_bindings"]
    transcript = Transcript.from_jsonl(tr.read_text())
    assert [r.kind for r in transcript] == ["UTIL", "VALUE"]
    assert audit_privacy(transcript, partition_views(load_instance(data.path("videoservice.json")))).passed


def test_solve_infeasible_exit_code(capsys):
    assert main(["solve", "--input", str(FIXTURES / "infeasible.json")]) == EXIT_INFEASIBLE
    assert json.loads(capsys.readouterr().out)["feasible"] is False


def test_solve_invalid_exit_code():
    assert main(["solve", "--input", str(FIXTURES / "invalid.json")]) == EXIT_INVALID


def test_solve_missing_file_exit_code(tmp_path):
    assert main(["solve", "--input", str(tmp_path / "nope.json")]) == EXIT_INVALID


def test_coordinate(capsys):
    assert main(["coordinate", "--spec", "videoservice_spec.json"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["assignment"] == {"SV1": "A-2", "SV2": "B-1"}
    assert out["cost"] == 15


def test_rq2_and_columns(tmp_path, capsys):
    out = tmp_path / "rq2.csv"
    assert main(["rq2", "--apps", "2,10", "--domains", "2,3", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    assert main(["columns", "--in", str(out), "--x", "n_apps", "--y", "messages"]) == EXIT_OK
    assert "10 20" in capsys.readouterr().out


def test_rq1_and_summarize(tmp_path, capsys):
    out = tmp_path / "rq1.csv"
    timelines = tmp_path / "tl"
    code = main(["rq1", "--apps", "2", "--days", "20", "--period", "10", "--seeds", "2",
                 "--out", str(out), "--timeline-dir", str(timelines)])
    assert code == EXIT_OK
    assert len(list(timelines.glob("*.csv"))) == 6
    assert main(["summarize", "--in", str(out)]) == EXIT_OK
    table = capsys.readouterr().out
    assert "Baseline 1" in table and "Coordination" in table


def test_rq1_bad_period(tmp_path):
    assert main(["rq1", "--days", "10", "--period", "20", "--out", str(tmp_path / "x.csv")]) == EXIT_INVALID


def test_summarize_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert main(["summarize", "--in", str(bad)]) == EXIT_INVALID


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coadapt.cli", "solve", "--input", "videoservice.json"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["cost"] == 15
