import csv
import json
import shutil

import pytest

from eoselm.cli import main


@pytest.fixture()
def work(tmp_path, desk_dir):
    shutil.copy(desk_dir / "kb.csv", tmp_path / "kb.csv")
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


def test_print_config_defaults(capsys):
    assert run("--print-config") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["trials"] == 50 and doc["model"]["K"] == 10 and doc["featsel"]["sigma"] == 0.2


def test_print_config_applies_file_and_flags(tmp_path, capsys):
    (tmp_path / "c.toml").write_text("trials = 7\n[model]\nL = 33\n")
    assert run("train-eval", "--config", tmp_path / "c.toml", "--seed", 4, "--mode", "chunk", "--print-config") == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["trials"], doc["seed"], doc["model"]["L"], doc["model"]["mode"]) == (7, 4, 33, "chunk")


def test_unknown_config_key_is_an_error(tmp_path, capsys):
    (tmp_path / "c.json").write_text('{"model": {"layers": 3}}')
    assert run("gen-kb", "--config", tmp_path / "c.json", "--out-dir", tmp_path) == 2
    assert "unknown key" in capsys.readouterr().err
    assert not (tmp_path / "kb.csv").exists()


def test_missing_kb_is_reported(tmp_path, capsys):
    assert run("model-select", "--out-dir", tmp_path) == 2
    assert "run gen-kb first" in capsys.readouterr().err


def test_small_grid_gen_kb(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": {"load_levels": [0.9, 1.2], "n_dispatch": 1, "n_faults": 6, "horizon": 2.0}}))
    assert run("gen-kb", "--config", cfg, "--out-dir", tmp_path / "a") == 0
    assert run("gen-kb", "--config", cfg, "--out-dir", tmp_path / "b") == 0
    a = (tmp_path / "a" / "kb.csv").read_bytes()
    assert a == (tmp_path / "b" / "kb.csv").read_bytes()
    assert len(a.decode().splitlines()) == 1 + 12
    assert "| Tz33 |" in (tmp_path / "a" / "feature_dictionary.md").read_text()
    summary = json.loads((tmp_path / "a" / "gen-kb-summary.json").read_text())
    assert summary["rows"] + summary["rejected"] == 12


def test_train_eval_then_predict(work):
    assert run("train-eval", "--out-dir", work, "--trials", 2, "--L", 10) == 0
    with open(work / "trials.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert sorted({r["method"] for r in rows}) == ["eoselm", "oselm", "sgbp"] and len(rows) == 6
    assert "time" not in (work / "trials.csv").read_text().splitlines()[0]
    assert run("predict", "--out-dir", work) == 0
    labels = (work / "labels.csv").read_text().splitlines()
    assert labels[0] == "row,label" and len(labels) == 301
    assert set(line.split(",")[1] for line in labels[1:]) <= {"1", "-1"}
    assert "median_ms" in json.loads((work / "predict-summary.json").read_text())


def test_predict_empty_input(work, tmp_path):
    assert run("train-eval", "--out-dir", work, "--trials", 1, "--L", 10) == 0
    header = (work / "kb.csv").read_text().splitlines()[0]
    (tmp_path / "empty.csv").write_text(header + "\n")
    assert run("predict", "--out-dir", work, "--input", tmp_path / "empty.csv", "--output", tmp_path / "o.csv") == 0
    assert (tmp_path / "o.csv").read_text() == "row,label\n"
    (tmp_path / "blank.csv").write_text("")
    assert run("predict", "--out-dir", work, "--input", tmp_path / "blank.csv", "--output", tmp_path / "p.csv") == 0
    assert (tmp_path / "p.csv").read_text() == "row,label\n"


def test_predict_missing_columns(work, tmp_path, capsys):
    assert run("train-eval", "--out-dir", work, "--trials", 1, "--L", 10) == 0
    (tmp_path / "bad.csv").write_text("Tz1,Tz2\n0,0\n")
    assert run("predict", "--out-dir", work, "--input", tmp_path / "bad.csv") == 2
    assert "missing feature column" in capsys.readouterr().err


def test_selected_L_needs_model_select(work, capsys):
    assert run("train-eval", "--out-dir", work, "--trials", 1, "--L", "selected") == 2
    assert "run model-select first" in capsys.readouterr().err


def test_model_select_feeds_train_eval(work, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"L_grid": [5, 15], "cv_repeats": 1}, "kb_path": str(work / "kb.csv")}))
    assert run("model-select", "--config", cfg, "--out-dir", work) == 0
    best = json.loads((work / "model-select-summary.json").read_text())["best_L"]
    assert best in (5, 15)
    assert run("train-eval", "--config", cfg, "--out-dir", work, "--trials", 1, "--L", "selected") == 0
    assert json.loads((work / "train-eval-summary.json").read_text())["L"] == best


def test_select_features_outputs(work, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 2, "featsel": {"pop_size": 6, "max_iters": 5}}))
    assert run("select-features", "--config", cfg, "--out-dir", work, "--L", 10) == 0
    subset = json.loads((work / "subset.json").read_text())
    assert subset["size"] == len(subset["features"]) >= 1 and subset["trace"] == "jaya_trace.csv"
    with open(work / "jaya_trace.csv") as fh:
        assert len(list(csv.reader(fh))) == 1 + 6
    with open(work / "feature_aggregates.csv") as fh:
        assert [r["method"] for r in csv.DictReader(fh)] == ["eoselm", "eoselm-subset"]


def test_benchmark_outputs(work):
    assert run("benchmark", "--out-dir", work, "--trials", 2, "--L", 10) == 0
    with open(work / "benchmark.csv") as fh:
        methods = [r["method"] for r in csv.DictReader(fh)]
    assert methods == ["oselm-1by1", "oselm-chunk", "eoselm", "sgbp"]
    timing = json.loads((work / "benchmark-summary.json").read_text())["timing"]
    assert set(timing) == set(methods)
