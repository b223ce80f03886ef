#!/usr/bin/env python3
"""
Tests for the optimizer, the training engine, checkpoints and evaluation
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from feature_capsnet.autodiff import Tensor, ops
from feature_capsnet.config import build_config
from feature_capsnet.data import Dataset, prototype_patterns, toy_blobs
from feature_capsnet.data.sources import resolve_data
from feature_capsnet.errors import DivergenceError, IngestError, NumericError, UsageError
from feature_capsnet.layers import CapsuleNetwork
from feature_capsnet.losses import LossBreakdown
from feature_capsnet.settings import get_mnist_dir
from feature_capsnet.training import (
    Adam,
    AdamState,
    EpochMetrics,
    MetricLog,
    adam_step,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from feature_capsnet.training import engine


@pytest.fixture
def blobs():
    return toy_blobs(20, (12, 12), seed=0)


@pytest.fixture
def blob_config(tiny_config):
    def make(**overrides):
        settings = {"n_class": 2, "image_height": 12, "image_width": 12, "batch_size": 4, "learning_rate": 0.01}
        return tiny_config(**{**settings, **overrides})

    return make


class TestAdam:
    def test_zero_gradient_leaves_parameters(self, rng):
        param = Tensor(rng.normal(size=(3, 4)))
        before = param.data.copy()
        state = AdamState.for_params([param])
        adam_step([param], [np.zeros((3, 4), dtype=param.data.dtype)], state, lr=0.1)
        assert_array_equal(param.data, before)
        assert state.step == 1

    def test_first_step_moves_by_learning_rate(self):
        param = Tensor(np.zeros(4))
        grad = np.array([2.0, -0.5, 1e-3, -7.0], dtype=param.data.dtype)
        adam_step([param], [grad], AdamState.for_params([param]), lr=0.01)
        assert_allclose(param.data, -0.01 * np.sign(grad), rtol=1e-4)

    def test_identical_runs_match(self, rng):
        start = rng.normal(size=5)
        grads = [rng.normal(size=5) for _ in range(4)]
        results = []
        for _ in range(2):
            param = Tensor(start)
            optimizer = Adam([param], lr=0.05)
            for grad in grads:
                optimizer.step([grad.astype(param.data.dtype)])
            results.append(param.data.copy())
        assert_array_equal(results[0], results[1])

    def test_misaligned_buffers(self):
        param = Tensor(np.zeros(3))
        with pytest.raises(UsageError, match="aligned"):
            adam_step([param], [], AdamState.for_params([param]), lr=0.1)


class TestMetricLog:
    def row(self, epoch, accuracy=0.5):
        return EpochMetrics(epoch, 1.0 / epoch, accuracy, 0.2, 0.01)

    def test_epochs_must_increase(self):
        log = MetricLog([self.row(1), self.row(2)])
        with pytest.raises(UsageError):
            log.append(self.row(2))

    def test_best_prefers_earliest_tie(self):
        log = MetricLog([self.row(1, 0.5), self.row(2, 0.9), self.row(3, 0.9)])
        assert log.best().epoch == 2

    def test_csv(self, tmp_path):
        log = MetricLog([self.row(1), self.row(2, 0.75)])
        path = tmp_path / "metrics.csv"
        log.to_csv(str(path))
        assert path.read_text().splitlines()[0] == "epoch,mean_loss,train_accuracy,seconds,seconds_per_sample"
        assert MetricLog.from_csv(str(path)).to_dicts() == log.to_dicts()

    def test_unreadable_csv(self, tmp_path):
        path = tmp_path / "metrics.csv"
        path.write_text("epoch,mean_loss\n1,x\n")
        with pytest.raises(IngestError):
            MetricLog.from_csv(str(path))


class TestTrain:
    def test_zero_epochs_checkpoints_initialization(self, blob_config, blobs):
        result = train(blob_config(epochs=0), blobs)
        assert result.checkpoint.epoch == 0
        assert len(result.metrics) == 0
        assert 0.0 <= result.checkpoint.train_accuracy <= 1.0

    def test_metrics_per_epoch(self, blob_config, blobs):
        result = train(blob_config(epochs=2), blobs)
        assert [row.epoch for row in result.metrics.rows] == [1, 2]
        assert all(row.seconds > 0 and row.mean_loss > 0 for row in result.metrics.rows)

    def test_selects_best_training_accuracy(self, blob_config, blobs):
        result = train(blob_config(epochs=3), blobs)
        best = result.metrics.best()
        assert result.checkpoint.epoch == best.epoch
        assert result.checkpoint.train_accuracy == best.train_accuracy
        for name, values in result.network.state_dict().items():
            assert_array_equal(values, result.checkpoint.state[name])

    def test_same_seed_same_learning_curve(self, blob_config, blobs):
        a = train(blob_config(epochs=2, seed=3), blobs)
        b = train(blob_config(epochs=2, seed=3), blobs)
        assert a.metrics.learning_curve() == b.metrics.learning_curve()
        for name, values in a.checkpoint.state.items():
            assert_array_equal(values, b.checkpoint.state[name])

    @pytest.mark.parametrize("head", [{"head_mode": "class"}, {"head_mode": "feature", "n_features": 4}])
    def test_loss_decreases(self, blob_config, blobs, head):
        result = train(blob_config(epochs=5, **head), blobs)
        curve = result.metrics.learning_curve()
        assert curve[-1][1] < curve[0][1]

    def test_class_count_mismatch(self, blob_config, blobs):
        with pytest.raises(UsageError, match="classes"):
            train(blob_config(n_class=3), blobs)

    def test_image_size_mismatch(self, blob_config):
        with pytest.raises(UsageError):
            train(blob_config(), toy_blobs(8, (10, 10)))

    def test_divergence(self, blob_config, blobs, monkeypatch):
        real_loss = engine.network_loss

        def poisoned(*args, **kwargs):
            losses = real_loss(*args, **kwargs)
            return LossBreakdown(losses.margin, losses.reconstruction, ops.scale(losses.total, float("nan")))

        monkeypatch.setattr(engine, "network_loss", poisoned)
        with pytest.raises(DivergenceError) as info:
            train(blob_config(epochs=3), blobs)
        assert (info.value.epoch, info.value.last_finite_epoch) == (1, 0)
        assert info.value.exit_code == 4

    def test_non_finite_parameters_report_last_finite_epoch(self, blob_config, blobs, monkeypatch):
        real_step = Adam.step

        def poisoned(self, grads):
            real_step(self, grads)
            # 5 batches per epoch: the first update of epoch 2
            if self.state.step == 6:
                for param in self.params:
                    param.data[...] = np.nan

        monkeypatch.setattr(Adam, "step", poisoned)
        with pytest.raises(DivergenceError) as info:
            train(blob_config(epochs=3), blobs)
        assert (info.value.epoch, info.value.last_finite_epoch) == (2, 1)

    def test_numeric_failure_inside_network_is_divergence(self, blob_config, blobs):
        config = blob_config(epochs=2)
        network = CapsuleNetwork(config)
        for param in network.parameters():
            param.data[...] = np.nan
        with pytest.raises(DivergenceError) as info:
            train(config, blobs, network)
        assert (info.value.epoch, info.value.last_finite_epoch) == (1, 0)
        assert isinstance(info.value.__cause__, NumericError)

    @pytest.mark.slow
    def test_feature_head_separates_blobs(self, blob_config, blobs):
        config = blob_config(head_mode="feature", n_features=2, epochs=50)
        result = train(config, blobs)
        assert result.checkpoint.train_accuracy == 1.0
        assert evaluate(result.checkpoint, blobs).accuracy == 1.0


class TestCheckpoint:
    def test_round_trip_scores_identically(self, blob_config, blobs, tmp_path):
        result = train(blob_config(epochs=1), blobs)
        save_checkpoint(result.checkpoint, str(tmp_path))
        restored = load_checkpoint(str(tmp_path))
        assert restored.epoch == result.checkpoint.epoch
        assert restored.config == result.checkpoint.config
        before = evaluate(result.checkpoint, blobs)
        after = evaluate(restored, blobs)
        assert after.accuracy == before.accuracy
        assert_array_equal(after.logits, before.logits)

    def test_manifest_section(self, blob_config, blobs, tmp_path):
        result = train(blob_config(epochs=0), blobs)
        save_checkpoint(result.checkpoint, str(tmp_path), {"data_source": "synthetic:blobs"})
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        section = manifest["checkpoint"]
        assert manifest["data_source"] == "synthetic:blobs"
        assert section["dtype"] == "<f4"
        total = sum(entry["count"] for entry in section["tensors"])
        assert (tmp_path / "checkpoint.bin").stat().st_size == 4 * total

    def test_float64_checkpoint(self, blob_config, blobs, tmp_path):
        result = train(blob_config(epochs=0, float64=True), blobs)
        save_checkpoint(result.checkpoint, str(tmp_path))
        restored = load_checkpoint(str(tmp_path))
        assert next(iter(restored.state.values())).dtype == np.float64

    def test_truncated_binary(self, blob_config, blobs, tmp_path):
        result = train(blob_config(epochs=0), blobs)
        bin_path = save_checkpoint(result.checkpoint, str(tmp_path))
        bin_path.write_bytes(bin_path.read_bytes()[:-8])
        with pytest.raises(IngestError, match="truncated"):
            load_checkpoint(str(tmp_path))

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(IngestError):
            load_checkpoint(str(tmp_path))


class TestEvaluate:
    def test_confusion_rows_sum_to_class_counts(self, tiny_config):
        corpus = prototype_patterns(3, 15, (10, 10), seed=1)
        result = evaluate(CapsuleNetwork(tiny_config()), corpus)
        assert_array_equal(result.confusion.sum(axis=1), corpus.class_counts())
        assert result.confusion.sum() == 15
        assert result.accuracy == pytest.approx(np.trace(result.confusion) / 15)
        assert result.logits.shape == (15, 3)

    def test_constant_model_scores_chance(self, tiny_config):
        network = CapsuleNetwork(tiny_config(n_class=10))
        network.load_state_dict({name: np.zeros_like(values) for name, values in network.state_dict().items()})
        corpus = prototype_patterns(10, 50, (10, 10), seed=2)
        result = evaluate(network, corpus)
        assert_array_equal(result.predictions, 0)
        assert result.accuracy == pytest.approx(0.1)

    def test_empty_class_is_nan(self, tiny_config):
        corpus = prototype_patterns(2, 6, (10, 10))
        widened = Dataset(corpus.images, corpus.labels, 3, "test", corpus.name)
        result = evaluate(CapsuleNetwork(tiny_config()), widened)
        assert np.isnan(result.per_class_accuracy[2])
        assert result.class_counts[2] == 0

    def test_class_count_mismatch(self, tiny_config, blobs):
        with pytest.raises(UsageError):
            evaluate(CapsuleNetwork(tiny_config(image_height=12, image_width=12)), blobs)


@pytest.mark.slow
@pytest.mark.skipif(get_mnist_dir() is None, reason="set CAPSNET_MNIST_DIR to an MNIST-format IDX directory")
class TestDeskScaleLearning:
    """2000/1000 balanced subset of an MNIST-format corpus, batch 64, 30 epochs"""

    def subset(self, dataset, per_class, split):
        picked = [np.flatnonzero(dataset.labels == c)[:per_class] for c in range(dataset.class_count)]
        return dataset.subset(np.sort(np.concatenate(picked)), split)

    @pytest.fixture(scope="class")
    def corpus(self):
        config = build_config(seed=0)
        train_set, test_set = resolve_data(get_mnist_dir(), config)
        return self.subset(train_set, 200, "train"), self.subset(test_set, 100, "test")

    @pytest.fixture(scope="class")
    def accuracies(self, corpus):
        train_set, test_set = corpus
        results = {}
        for name, head in [("class", {}), ("feature", {"head_mode": "feature", "n_features": 4})]:
            config = build_config(epochs=30, batch_size=64, seed=0, **head)
            results[name] = evaluate(train(config, train_set).checkpoint, test_set).accuracy
        return results

    def test_both_heads_learn(self, accuracies):
        assert accuracies["class"] >= 0.9
        assert accuracies["feature"] >= 0.9

    def test_feature_head_keeps_up_with_class_head(self, accuracies):
        assert abs(accuracies["feature"] - accuracies["class"]) <= 0.03
