import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import TOY3, TOY12
from graph_infill.cli import main, read_matrix
from graph_infill.graph import normalize
from graph_infill.ingest import MaskSpec, apply_mask, load_dataset, make_split
from graph_infill.precoder import harmonic_oracle
from graph_infill.report import EvalReport

FAST_TRAIN = ["--epochs", "3", "--set", "train.hidden_dim=8", "--set", "train.generator_hidden=16",
              "--set", "probe.max_epochs=20", "--set", "probe.hidden_dim=8"]


def run(*argv):
    return main([str(a) for a in argv])


def test_precode_toy3_matches_oracle(tmp_path, toy3):
    assert run("precode", "--dataset", TOY3, "--out", tmp_path, "--ks", "1,2", "--iterations", "60") == 0
    got = read_matrix(tmp_path / "precoded.tsv", toy3)
    split = make_split(toy3, MaskSpec(0.6, 0))
    want = harmonic_oracle(apply_mask(toy3, split), normalize(toy3.graph)).values
    np.testing.assert_allclose(got, want, atol=1e-6)
    energy = (tmp_path / "energy.csv").read_text().splitlines()
    assert energy[0] == "iteration,dirichlet_energy,normalized_energy" and len(energy) == 62
    report = EvalReport.load(tmp_path / "report.json")
    assert report.label == "FP" and set(report.recall_at) == {1, 2}
    assert report.config_echo["precoder"]["iterations"] == 60
    assert (tmp_path / "id_map.tsv").exists() and (tmp_path / "config.txt").exists()


def test_precode_rate_zero_returns_input(tmp_path, toy3):
    assert run("precode", "--dataset", TOY3, "--out", tmp_path, "--ks", "1", "--missing-rate", "0") == 0
    assert np.array_equal(read_matrix(tmp_path / "precoded.tsv", toy3), toy3.features.values)


def test_train_eval_round_trip(tmp_path, toy12):
    out = tmp_path / "train"
    assert run("train", "--dataset", TOY12, "--out", out, "--ks", "2,4", "--seed", "1", *FAST_TRAIN) == 0
    for name in ("checkpoint.npz", "imputed.tsv", "embedding.tsv", "history.csv", "report.json"):
        assert (out / name).exists(), name
    trained = EvalReport.load(out / "report.json")
    assert trained.label == "AmGCL" and trained.seed == 1
    assert trained.config_echo["train"]["epochs"] == 3 and len(trained.accuracy_folds) == 5

    ev = tmp_path / "eval"
    assert run("eval", "--dataset", TOY12, "--out", ev, "--ks", "2,4", "--seed", "1", *FAST_TRAIN,
               "--features", out / "imputed.tsv", "--embedding", out / "embedding.tsv") == 0
    again = EvalReport.load(ev / "eval_report.json")
    assert again.metric_values() == trained.metric_values()


def test_train_twice_same_metrics(tmp_path):
    reports = []
    for name in ("a", "b"):
        assert run("train", "--dataset", TOY12, "--out", tmp_path / name, "--ks", "2", *FAST_TRAIN) == 0
        reports.append(json.loads((tmp_path / name / "report.json").read_text()))
    keys = ("recall_at", "ndcg_at", "ndcg_full_at", "accuracy_folds", "accuracy_mean")
    assert [reports[0][k] for k in keys] == [reports[1][k] for k in keys]


def test_star_variant_label(tmp_path):
    assert run("train", "--dataset", TOY12, "--out", tmp_path, "--ks", "2", "--variant", "star", *FAST_TRAIN) == 0
    assert EvalReport.load(tmp_path / "report.json").label == "AmGCL*"
    history = (tmp_path / "history.csv").read_text().splitlines()[1:]
    assert all(line.split(",")[2] == "None" for line in history)


def test_eval_truth_as_scores(tmp_path, toy12):
    features = tmp_path / "truth.tsv"
    with open(features, "w") as fh:
        for ext, row in zip(toy12.external_ids, toy12.features.values):
            fh.write(ext + "\t" + "\t".join(map(repr, row.tolist())) + "\n")
    k = int(toy12.features.values.sum(axis=1).max())
    assert run("eval", "--dataset", TOY12, "--out", tmp_path, "--ks", str(k), "--features", features,
               "--probe-inputs", "imputed", "--set", "probe.max_epochs=5") == 0
    assert EvalReport.load(tmp_path / "eval_report.json").recall_at[k] == 1.0


def test_unknown_key_exits_1_naming_key(tmp_path, capsys):
    assert run("train", "--dataset", TOY12, "--out", tmp_path, "--set", "train.warp=9") == 1
    assert "train.warp" in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run("nope") == 1
    assert run("train", "--out", tmp_path) == 1
    assert "dataset" in capsys.readouterr().err
    assert run("bench", "--sizes", "10:x:3") == 1
    assert run("eval", "--dataset", TOY12, "--out", tmp_path) == 1


def test_data_errors_exit_2(tmp_path):
    assert run("precode", "--dataset", tmp_path / "missing", "--out", tmp_path / "o") == 2
    bad = tmp_path / "bad.tsv"
    bad.write_text("zzz\t1\t2\n")
    assert run("eval", "--dataset", TOY12, "--out", tmp_path, "--ks", "2", "--features", bad) == 2


def test_config_file_then_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"dataset_dir = {TOY3}\n[precoder]\niterations = 5\n[eval]\nks = 1\n")
    assert run("precode", "--config", cfg, "--out", tmp_path / "o", "--iterations", "7") == 0
    assert len((tmp_path / "o" / "energy.csv").read_text().splitlines()) == 9


def test_bench_writes_table(tmp_path, capsys):
    assert run("bench", "--sizes", "20:30:4,20:60:4", "--epochs", "1", "--out", tmp_path) == 0
    assert "exponent in num_edges" in capsys.readouterr().out
    assert len((tmp_path / "bench.tsv").read_text().splitlines()) == 3


def test_selfcheck_passes_and_detects_fault(monkeypatch, capsys):
    assert run("selfcheck") == 0
    from graph_infill.engine import ops
    monkeypatch.setattr(ops, "_relu_grad", lambda g, x, needs: (g,))
    assert run("selfcheck") == 3
    assert "FAIL" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "graph_infill", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "selfcheck" in proc.stdout
