#!/usr/bin/env python3
"""
End-to-end tests of the command line through main(argv)
"""

import csv
import json

import numpy as np
import pytest

from conftest import TINY_ARCHITECTURE
from feature_capsnet.autodiff import ops
from feature_capsnet.cli import main
from feature_capsnet.data import prototype_patterns, write_idx


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({**TINY_ARCHITECTURE, "n_class": 2, "batch_size": 4, "learning_rate": 0.01}))
    return str(path)


@pytest.fixture
def trained_run(tmp_path, config_file):
    out = tmp_path / "run"
    code = main(["train", "--config", config_file, "--data", "synthetic:blobs", "--epochs", "2", "--out", str(out)])
    assert code == 0
    return out


class TestParser:
    def test_unknown_flag(self, capsys):
        assert main(["train", "--frobnicate"]) == 2

    def test_missing_command(self, capsys):
        assert main([]) == 2

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "feature-capsnet" in capsys.readouterr().out


class TestTrain:
    def test_missing_data(self, tmp_path, capsys):
        assert main(["train", "--out", str(tmp_path)]) == 3
        assert "--data" in capsys.readouterr().err

    def test_feature_head_needs_n_features(self, tmp_path, capsys):
        code = main(["train", "--head", "feature", "--data", "synthetic:blobs", "--out", str(tmp_path)])
        assert code == 2
        assert "n_features" in capsys.readouterr().err

    def test_unreadable_data(self, tmp_path, config_file):
        assert main(["train", "--config", config_file, "--data", str(tmp_path / "none"), "--out", str(tmp_path)]) == 3

    def test_missing_config_file(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "none.json"), "--data", "synthetic:blobs"]) == 2

    def test_run_directory_holds_three_files(self, trained_run):
        assert sorted(p.name for p in trained_run.iterdir()) == ["checkpoint.bin", "manifest.json", "metrics.csv"]
        manifest = json.loads((trained_run / "manifest.json").read_text())
        assert manifest["data_source"] == "synthetic:blobs"
        assert manifest["train_samples"] == 20
        assert manifest["config"]["epochs"] == 2
        assert manifest["checkpoint"]["file"] == "checkpoint.bin"
        assert len((trained_run / "metrics.csv").read_text().splitlines()) == 3

    def test_flags_override_config_file(self, tmp_path, config_file):
        out = tmp_path / "run"
        args = ["train", "--config", config_file, "--data", "synthetic:blobs", "--epochs", "0", "--seed", "7"]
        assert main([*args, "--head", "feature", "--n-features", "3", "--out", str(out)]) == 0
        config = json.loads((out / "manifest.json").read_text())["config"]
        assert (config["head_mode"], config["n_features"], config["seed"]) == ("feature", 3, 7)


class TestEval:
    def test_writes_confusion_matrix(self, trained_run, capsys):
        assert main(["eval", "--checkpoint", str(trained_run), "--data", "synthetic:blobs"]) == 0
        assert "accuracy=" in capsys.readouterr().out
        with open(trained_run / "confusion.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["true_class", "predicted_0", "predicted_1"]
        assert sum(int(v) for row in rows[1:] for v in row[1:]) == 10

    def test_confusion_to_other_directory(self, trained_run, tmp_path):
        out = tmp_path / "eval"
        assert main(["eval", "--checkpoint", str(trained_run), "--data", "synthetic:blobs", "--out", str(out)]) == 0
        assert (out / "confusion.csv").exists()

    def test_class_count_mismatch(self, trained_run, tmp_path, capsys):
        corpus = tmp_path / "three"
        corpus.mkdir()
        patterns = prototype_patterns(3, 9, (10, 10))
        write_idx(patterns, str(corpus / "train-images-idx3-ubyte"), str(corpus / "train-labels-idx1-ubyte"))
        assert main(["eval", "--checkpoint", str(trained_run), "--data", str(corpus)]) == 2
        assert "classes" in capsys.readouterr().err

    def test_missing_checkpoint(self, tmp_path):
        assert main(["eval", "--checkpoint", str(tmp_path), "--data", "synthetic:blobs"]) == 3


class TestGradcheck:
    def test_all_layers_pass(self, capsys):
        assert main(["gradcheck", "--seed", "0"]) == 0
        out = capsys.readouterr().out
        assert "network_feature" in out
        assert "FAIL" not in out

    def test_single_layer(self, capsys):
        assert main(["gradcheck", "--layer", "routing"]) == 0
        out = capsys.readouterr().out
        assert "routing" in out
        assert "decoder" not in out

    def test_unknown_layer(self, capsys):
        assert main(["gradcheck", "--layer", "nonsense"]) == 2

    def test_broken_backward_rule_exits_5(self, monkeypatch, capsys):
        monkeypatch.setattr(ops, "_sigmoid_backward", lambda g, out: (g * out,))
        assert main(["gradcheck", "--layer", "decoder"]) == 5
        assert "decoder" in capsys.readouterr().err

    def test_float64_suite_passes(self, capsys):
        assert main(["gradcheck", "--float64"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_zeroed_softmax_backward_fails_feature_network(self, monkeypatch, capsys):
        monkeypatch.setattr(ops, "_softmax_backward", lambda g, out, axis: (np.zeros_like(g),))
        assert main(["gradcheck", "--layer", "network_feature"]) == 5
        assert "network_feature" in capsys.readouterr().err


class TestAccount:
    def test_prints_class_head_size(self, capsys):
        assert main(["account", "--head", "feature", "--n-features", "10", "--classes", "50"]) == 0
        out = capsys.readouterr().out
        assert "32,200 bytes" in out

    def test_json(self, capsys):
        assert main(["account", "--head", "feature", "--n-features", "10", "--classes", "199", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["fc_bytes"] == 128156
        assert payload["max_batch"] > 0

    def test_small_budget_prints_no_batch(self, capsys):
        assert main(["account", "--budget", "1000", "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["max_batch"] is None


class TestBench:
    def write_sweep(self, tmp_path, **overrides):
        sweep = {
            "datasets": [{"name": "toy", "classes": 3, "train_count": 50}],
            "head_modes": ["feature"],
            "n_features": [2],
            "timing_samples": 4,
            "workers": 1,
            "base_config": {**TINY_ARCHITECTURE, "batch_size": 4},
            **overrides,
        }
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(sweep))
        return str(path)

    def test_writes_report(self, tmp_path):
        out = tmp_path / "report"
        assert main(["bench", "--sweep", self.write_sweep(tmp_path), "--budget", str(2**26), "--out", str(out)]) == 0
        assert (out / "report.json").exists()
        with open(out / "time_per_sample.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["dataset", "n_features_2"]
        assert float(rows[1][1]) > 0

    def test_every_cell_failing_exits_4(self, tmp_path, capsys):
        datasets = [{"name": "gone", "classes": 3, "train_count": 5, "source": str(tmp_path / "absent")}]
        out = tmp_path / "report"
        assert main(["bench", "--sweep", self.write_sweep(tmp_path, datasets=datasets), "--out", str(out)]) == 4
        assert not out.exists()

    def test_invalid_sweep_exits_2(self, tmp_path):
        assert main(["bench", "--sweep", self.write_sweep(tmp_path, repetitions=1)]) == 2


class TestSettings:
    def test_non_integer_seed_is_logged_and_ignored(self, monkeypatch, capsys):
        monkeypatch.setenv("CAPSNET_SEED", "abc")
        assert main(["gradcheck", "--layer", "routing"]) == 0
        captured = capsys.readouterr()
        assert "CAPSNET_SEED" in captured.err
        assert "CAPSNET_SEED" not in captured.out
        assert "seed 0" in captured.out
