import json
import logging

import pandas as pd
import pytest

from graph_al_bench.main import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)


@pytest.fixture
def config(tmp_path, dataset_dir):
    path = tmp_path / "sbm.toml"
    path.write_text(f"""
[dataset]
directory = "{dataset_dir.as_posix()}"

[protocol]
labeled_count = 4
repetitions = 3

[gcn]
epochs = 10

[strategy]
names = ["random", "entropy"]

[output]
directory = "{(tmp_path / 'results').as_posix()}"

[analysis]
fractions = [0.05, 0.5, 1.0]
repetitions = 3
""", encoding="utf-8")
    return path


def test_gen_sbm_then_validate(tmp_path, capsys):
    out = tmp_path / "toy"
    assert main(["gen-sbm", str(out), "--sizes", "30,20", "--p-in", "0.3", "--seed", "2"]) == EXIT_OK
    assert {p.name for p in out.iterdir()} == {"edges.tsv", "labels.tsv"}
    capsys.readouterr()
    assert main(["validate", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "50 nodes" in printed
    assert "2 classes" in printed


def test_validate_missing_labels(tmp_path):
    (tmp_path / "edges.tsv").write_text("a\tb\n", encoding="utf-8")
    assert main(["validate", str(tmp_path)]) == EXIT_USAGE


def test_validate_parse_failure(tmp_path):
    (tmp_path / "edges.tsv").write_text("a\tb\tc\n", encoding="utf-8")
    (tmp_path / "labels.tsv").write_text("a\tX\n", encoding="utf-8")
    assert main(["validate", str(tmp_path)]) == EXIT_USAGE


def test_run_writes_outputs_and_manifest(config, tmp_path):
    code = main(["run", "--config", str(config), "--strategy", "region_margin",
                 "--reps", "2", "--seed", "7", "--workers", "1"])
    assert code == EXIT_OK
    results = tmp_path / "results"
    for name in ("manifest.json", "curves.csv", "summary.csv", "final_deltas.csv", "run.log"):
        assert (results / name).is_file()
    manifest = json.loads((results / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "completed"
    assert manifest["seeds"] == [7, 8]
    assert manifest["strategies"] == ["region_margin"]
    assert set(manifest["dataset_checksums"]) == {"edges.tsv", "labels.tsv"}
    curves = pd.read_csv(results / "curves.csv")
    assert set(curves["run_id"]) == {"region_margin:seed7", "region_margin:seed8"}
    assert not (results / "weights").exists()


def test_run_dumps_final_weights_per_run(config, tmp_path):
    code = main(["run", "--config", str(config), "--strategy", "entropy", "--reps", "2",
                 "--seed", "7", "--workers", "1", "--dump-weights"])
    assert code == EXIT_OK
    weights = tmp_path / "results" / "weights"
    assert sorted(p.name for p in weights.iterdir()) == ["entropy_seed7", "entropy_seed8"]
    layer0 = pd.read_csv(weights / "entropy_seed7" / "layer0.csv", header=None)
    layer1 = pd.read_csv(weights / "entropy_seed7" / "layer1.csv", header=None)
    assert layer0.shape[1] == layer1.shape[0] == 16


def test_sweep_runs_every_strategy(config, tmp_path):
    assert main(["sweep", "--config", str(config), "--workers", "1"]) == EXIT_OK
    curves = pd.read_csv(tmp_path / "results" / "curves.csv")
    assert set(curves["strategy"]) == {"random", "entropy"}
    assert curves["run_id"].nunique() == 6
    deltas = pd.read_csv(tmp_path / "results" / "final_deltas.csv")
    assert set(deltas["strategy"]) == {"random", "entropy"}


def test_unknown_strategy_is_a_usage_error(config, capsys):
    assert main(["run", "--config", str(config), "--strategy", "oracle_peek"]) == EXIT_USAGE
    assert "region_entropy" in capsys.readouterr().err


def test_failed_runs_mark_manifest(config, tmp_path):
    config.write_text(config.read_text(encoding="utf-8").replace(
        "labeled_count = 4", 'labeled_count = 4\nprotocol = "fixed-split"\ntest_size = 95'),
        encoding="utf-8")
    assert main(["run", "--config", str(config), "--workers", "1"]) == EXIT_RUNTIME
    manifest = json.loads((tmp_path / "results" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "failed"
    assert (tmp_path / "results" / "curves.csv").is_file()


def test_analyze_distance(config, tmp_path):
    out = tmp_path / "distance"
    assert main(["analyze-distance", "--config", str(config), "--seed", "3",
                 "--output", str(out)]) == EXIT_OK
    curve = pd.read_csv(out / "distance_curve.csv")
    assert curve["fraction"].tolist() == [0.05, 0.5, 1.0]
    assert curve["mean_distance"].iloc[-1] == 0.0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "completed"
    assert 0 < manifest["results"]["regional_phase_fraction"] <= 1


def test_rank_command(config, tmp_path):
    assert main(["rank", "--config", str(config), "--labeled", "0,1"]) == EXIT_OK
    table = pd.read_csv(tmp_path / "results" / "rank.csv")
    assert list(table.columns) == ["node_id", "pr", "apr", "ratio"]
    assert main(["rank", "--config", str(config), "--labeled", "nope"]) == EXIT_USAGE
