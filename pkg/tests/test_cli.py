import json
import sys

import pytest

import make_models
from conftest import FIXED_COSTS
from constants import Constants
from modules.project_paths import ProjectPaths


def _run(monkeypatch, *argv):
    monkeypatch.setattr(sys, "argv", ["make_models.py", *argv])
    make_models.main()


@pytest.fixture
def synth_dir(tmp_path, monkeypatch, capsys):
    data = str(tmp_path / "data")
    _run(monkeypatch, "synth", "--data", data, "--task", "regression", "--n", "3000", "--d", "4", "--quiet")
    assert capsys.readouterr().out.split() == ["3000", "4", "regression", "0"]
    # fixed costs instead of timing a tiny dataset
    FIXED_COSTS.dump_to_json(ProjectPaths(data).cost_model_json("linreg"))
    return data


def test_query_then_repeat_reuses_the_stored_model(synth_dir, monkeypatch, capsys):
    _run(monkeypatch, "query", "--data", synth_dir, "--kind", "linreg", "--range", "100:1999", "--report", "json", "-q")
    first = json.loads(capsys.readouterr().out)
    assert first["materialized_id"]
    _run(monkeypatch, "query", "--data", synth_dir, "--kind", "linreg", "--range", "100:1999", "--report", "json", "-q")
    second = json.loads(capsys.readouterr().out)
    assert [s["model_id"] for s in second["plan"]["steps"]] == [first["materialized_id"]]

    _run(monkeypatch, "query", "--data", synth_dir, "--kind", "linreg", "--range", "100:1999", "--explain", "-q")
    assert "Plan for linreg query [100,1999]" in capsys.readouterr().out


def test_materialize_and_catalog_actions(synth_dir, monkeypatch, capsys):
    _run(monkeypatch, "materialize", "--data", synth_dir, "--kind", "linreg", "--range", "0:1499", "-q")
    model_id = capsys.readouterr().out.strip()
    assert model_id.startswith("linreg-")

    _run(monkeypatch, "catalog", "list", "--data", synth_dir, "-q")
    assert capsys.readouterr().out.split()[:4] == [model_id, "linreg", "0", "1499"]
    _run(monkeypatch, "catalog", "show", model_id, "--data", synth_dir, "-q")
    assert "points: 1500" in capsys.readouterr().out
    _run(monkeypatch, "catalog", "coverage", "--data", synth_dir, "--kind", "linreg", "-q")
    assert capsys.readouterr().out.strip() == "linreg\t50.00%"
    _run(monkeypatch, "catalog", "rebuild", "--data", synth_dir, "-q")
    assert capsys.readouterr().out.split() == ["linreg", "0", "1499", model_id]
    _run(monkeypatch, "catalog", "stats", "--data", synth_dir, "-q")
    assert "total\t1\t" in capsys.readouterr().out


def test_errors_exit_with_status_one(synth_dir, monkeypatch):
    with pytest.raises(SystemExit) as err:
        _run(monkeypatch, "query", "--data", synth_dir, "--kind", "linreg", "--range", "0:5000", "-q")
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        _run(monkeypatch, "query", "--data", synth_dir, "--kind", "nb-gaussian", "--range", "0:99", "-q")
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        _run(monkeypatch, "synth", "--data", synth_dir, "-q")
    assert err.value.code == 1


def test_bench_and_bound_commands(tmp_path, monkeypatch, capsys):
    data = str(tmp_path / "blobs")
    _run(monkeypatch, "synth", "--data", data, "--task", "classification", "--n", "2000", "--d", "3", "-q")
    capsys.readouterr()

    out = str(tmp_path / "bench.csv")
    _run(monkeypatch, "bench", "--data", data, "--kind", "nb-gaussian", "--coverage-targets", "0,50",
         "--model-size-dist", "fixed:200", "--query-size-dist", "uniform:100:400", "--queries", "4",
         "--out", out, "-q")
    assert capsys.readouterr().out.strip() == out
    with open(out) as f:
        lines = f.read().splitlines()
    assert lines[0] == Constants.BenchConstants.SPEEDUP_NOTE
    assert lines[1].split(",") == list(Constants.BenchConstants.CSV_HEADER)
    assert len(lines) == 4

    _run(monkeypatch, "bound", "--data", data, "--range", "0:1999", "--chunk-size", "200", "--lambda", "0.1", "-q")
    printed = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert printed["chunks"] == "10"
    assert float(printed["distance"]) >= 0


def test_ingest(tmp_path, monkeypatch, capsys):
    csv_path = tmp_path / "in.csv"
    csv_path.write_text("a,b,label\n0.1,1.0,0\n0.2,2.0,1\n0.3,3.0,1\n0.4,4.0,0\n")
    data = str(tmp_path / "ingested")
    _run(monkeypatch, "ingest", str(csv_path), "--data", data, "--target", "label", "--task", "classification", "-q")
    assert capsys.readouterr().out.split() == ["4", "2", "classification", "2"]
