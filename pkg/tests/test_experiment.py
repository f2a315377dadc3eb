import csv
import io
import json
import subprocess

import pytest

from cpnevac.cli import depth_range, main
from cpnevac.experiment import (
    ExperimentSpec,
    blob_hash,
    emit_edge_visits,
    emit_exit_shares,
    movement_depth_sweep,
    run_experiment,
    to_csv,
)
from cpnevac.scenario import Scenario, demo_text

from helpers import line_graph


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_one_cell_two_replications_shape(tmp_path):
    spec = ExperimentSpec(populations=(30,), modes=("dijkstra",), replications=2, out=str(tmp_path))
    run_experiment(spec)
    rows = read_csv(tmp_path / "summary.csv")
    assert len(rows) == 1
    row = rows[0]
    for metric in ("survivors", "evac_time", "congestion"):
        assert float(row[f"{metric}_min"]) <= float(row[f"{metric}_mean"]) <= float(row[f"{metric}_max"])
    assert len(read_csv(tmp_path / "runs.csv")) == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["spec"]["seeds"] == [0, 1]
    assert manifest["scenario_sha1"] == blob_hash(demo_text().encode())


def test_aggregates_recompute_from_run_rows(tmp_path):
    spec = ExperimentSpec(populations=(30, 60), modes=("dijkstra", "cpn-sp"), replications=3, seed=7, out=str(tmp_path))
    run_experiment(spec)
    runs = read_csv(tmp_path / "runs.csv")
    for row in read_csv(tmp_path / "summary.csv"):
        cell = [r for r in runs if r["mode"] == row["mode"] and r["population"] == row["population"]]
        assert len(cell) == 3
        survivors = [int(r["survivors"]) for r in cell]
        congestion = [int(r["congestion_events"]) for r in cell]
        assert float(row["survivors_mean"]) == pytest.approx(sum(survivors) / 3)
        assert float(row["congestion_max"]) == max(congestion)
        assert {int(r["seed"]) for r in cell} == {7, 8, 9}


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_experiment(ExperimentSpec(populations=(30,), modes=("cpn-st",), replications=2, out=str(out)))
    for name in ("summary.csv", "runs.csv", "edge_visits.csv", "exit_shares.csv", "congestion_table.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_exit_shares_sum_to_one_per_mode():
    spec = ExperimentSpec(populations=(60,), modes=("dijkstra", "cpn-st"), replications=2)
    res = run_experiment(spec)
    rows = emit_exit_shares(res.scenario, {m: res.runs[60, m] for m in spec.modes})
    for mode in spec.modes:
        assert sum(r["share"] for r in rows if r["mode"] == mode) == pytest.approx(1.0)
    for r in res.runs[60, "cpn-st"]:
        assert sum(r.exit_shares.values()) == pytest.approx(1.0)


def test_edge_visits_cover_every_edge():
    spec = ExperimentSpec(populations=(30,), modes=("dijkstra",), replications=1)
    res = run_experiment(spec)
    rows = emit_edge_visits(res.scenario, {"dijkstra": res.runs[30, "dijkstra"]})
    assert len(rows) == len(res.scenario.graph.edges)
    assert sum(r["visit_count"] for r in rows) == sum(res.runs[30, "dijkstra"][0].edge_visits)


def test_single_exit_scenario_warns(caplog):
    sc = Scenario(line_graph([100.0]))
    rows = emit_exit_shares(sc, {"dijkstra": []})
    assert "single exit" in caplog.text
    assert rows[0]["share"] == 0.0


def test_depth_sweep_flags_one_argmax():
    spec = ExperimentSpec(replications=2)
    rows = movement_depth_sweep(spec, depths=(1, 2, 3), population=30)
    assert [r["movement_depth"] for r in rows] == [1, 2, 3]
    assert sum(r["argmax"] for r in rows) == 1
    best = next(r for r in rows if r["argmax"])
    assert best["survivors_mean"] == max(r["survivors_mean"] for r in rows)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(replications=0)
    with pytest.raises(ValueError):
        ExperimentSpec(populations=())
    with pytest.raises(ValueError):
        ExperimentSpec(modes=("warp",))
    assert ExperimentSpec(seed=5, replications=3).seed_list() == (5, 6, 7)


def test_blob_hash_matches_git(tmp_path):
    data = b"hello\n"
    assert blob_hash(data) == "ce013625030ba8dba906f756967f9e9ca394464a"
    p = tmp_path / "x"
    p.write_bytes(data)
    try:
        out = subprocess.run(["git", "hash-object", str(p)], capture_output=True, text=True, check=True).stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        pytest.skip("git unavailable")
    assert out == blob_hash(data)


def test_to_csv_empty():
    assert to_csv([]) == ""


def test_cli_runs_and_writes_tables(tmp_path, capsys):
    rc = main(["--populations", "30", "--modes", "dijkstra,cpn-st", "--replications", "1", "--out", str(tmp_path), "-q", "--event-log"])
    assert rc == 0
    assert (tmp_path / "summary.csv").exists()
    assert len(list((tmp_path / "events").glob("*.csv"))) == 2
    assert "population 30" in capsys.readouterr().out


def test_cli_depth_sweep(tmp_path):
    rc = main(["--sweep-depth", "1..2", "--sweep-population", "30", "--replications", "1", "--out", str(tmp_path), "-q"])
    assert rc == 0
    assert len(read_csv(tmp_path / "depth_sweep.csv")) == 2


def test_cli_bad_scenario_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": 1, "nodes": []}')
    assert main(["--scenario", str(bad), "--out", str(tmp_path / "o"), "-q"]) != 0
    assert main(["--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o"), "-q"]) != 0
    assert "cannot load scenario" in capsys.readouterr().err


def test_cli_rejects_unknown_mode():
    with pytest.raises(SystemExit):
        main(["--modes", "dijkstra,teleport"])


def test_depth_range_parsing():
    assert depth_range("1..4") == (1, 2, 3, 4)
    assert depth_range("2,5") == (2, 5)
