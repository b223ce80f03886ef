"""
Training loop, model selection and evaluation
"""

import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..autodiff import Tape, Tensor, precision
from ..config import NetworkConfig
from ..data import BatchIterator, Dataset
from ..errors import DivergenceError, NumericError, UsageError
from ..layers import CapsuleNetwork
from ..logs import get_logger
from ..losses import network_loss
from .adam import Adam
from .checkpoint import Checkpoint
from .metrics import EpochMetrics, MetricLog

logger = get_logger(__name__)

EVAL_BATCH_SIZE = 256


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: MetricLog
    network: CapsuleNetwork


@dataclass
class EvalResult:
    """Test-set outcome; confusion rows are true classes, columns predictions"""

    accuracy: float
    per_class_accuracy: np.ndarray
    class_counts: np.ndarray
    confusion: np.ndarray
    logits: np.ndarray
    predictions: np.ndarray


def _check_dataset(config: NetworkConfig, dataset: Dataset) -> None:
    if dataset.class_count != config.n_class:
        raise UsageError(f"Dataset {dataset.name} has {dataset.class_count} classes, config expects {config.n_class}")
    expected = (config.image_height, config.image_width)
    if dataset.image_size != expected:
        raise UsageError(f"Dataset {dataset.name} has {dataset.image_size} images, config expects {expected}")


def train(config: NetworkConfig, train_set: Dataset, network: Optional[CapsuleNetwork] = None) -> TrainResult:
    """Fit a capsule network and keep the parameters with the best training accuracy

    Accuracy per epoch is the running accuracy over that epoch's batches.
    With zero epochs the checkpoint holds the initialization, scored on the
    whole train set.

    Args:
        config: Validated network config
        train_set: Training corpus with config.n_class classes
        network: Optional prebuilt network to continue from

    Returns:
        TrainResult with the selected checkpoint, the metric log and the
        network holding the selected parameters

    Raises:
        UsageError: If the dataset does not match the config
        DivergenceError: If a batch loss, a step inside the network or an
            updated parameter becomes non-finite
    """
    _check_dataset(config, train_set)
    network = network or CapsuleNetwork(config)
    params = network.parameters()
    optimizer = Adam(params, config.learning_rate)
    batches = BatchIterator(train_set, config.batch_size, seed=config.seed)
    log = MetricLog()

    with precision(config.dtype):
        if config.epochs == 0:
            accuracy = evaluate(network, train_set).accuracy
            logger.info(f"No epochs requested; initialization scores {accuracy:.4f} on the train set")
            return TrainResult(Checkpoint.from_network(network, 0, accuracy), log, network)

        best: Optional[Checkpoint] = None
        for epoch in range(1, config.epochs + 1):
            started = time.perf_counter()
            loss_sum = 0.0
            correct = 0
            for batch in batches.epoch(epoch):
                try:
                    with Tape() as tape:
                        images = network.as_input(batch.images)
                        output = network.forward(images, batch.labels, with_reconstruction=True)
                        losses = network_loss(output, images, batch.labels, config.head_mode, config.loss)
                        loss_value = losses.total.item()
                        if not np.isfinite(loss_value):
                            raise NumericError(f"Batch loss is {loss_value}")
                        tape.backward(losses.total)
                        grads = tape.gradients(params)
                except NumericError as e:
                    raise DivergenceError(epoch, epoch - 1) from e
                optimizer.step(grads)
                if not all(np.all(np.isfinite(p.data)) for p in params):
                    raise DivergenceError(epoch, epoch - 1)
                loss_sum += loss_value * len(batch.labels)
                correct += int(np.sum(output.predictions == batch.labels))

            seconds = time.perf_counter() - started
            row = EpochMetrics(
                epoch=epoch,
                mean_loss=loss_sum / len(train_set),
                train_accuracy=correct / len(train_set),
                seconds=seconds,
                seconds_per_sample=seconds / len(train_set),
            )
            log.append(row)
            logger.info(
                f"Epoch {epoch}/{config.epochs}: loss {row.mean_loss:.5f}, "
                f"train accuracy {row.train_accuracy:.4f}, {row.seconds_per_sample * 1e3:.2f} ms/sample"
            )
            if log.best() is row:
                best = Checkpoint.from_network(network, epoch, row.train_accuracy)

    network.load_state_dict(best.state)
    logger.info(f"Selected epoch {best.epoch} with train accuracy {best.train_accuracy:.4f}")
    return TrainResult(best, log, network)


def evaluate(model: Union[Checkpoint, CapsuleNetwork], test_set: Dataset, batch_size: int = EVAL_BATCH_SIZE) -> EvalResult:
    """Score a checkpoint or network on a labelled set

    Predictions are the argmax of capsule lengths (class mode) or head
    probabilities (feature mode), lowest index on ties.

    Raises:
        UsageError: If class count or image size differ from the model's config
    """
    network = model.to_network() if isinstance(model, Checkpoint) else model
    config = network.config
    _check_dataset(config, test_set)

    n_class = config.n_class
    logits = np.zeros((len(test_set), n_class), dtype=config.dtype)
    predictions = np.zeros(len(test_set), dtype=np.int64)
    with precision(config.dtype):
        for start in range(0, len(test_set), batch_size):
            stop = start + batch_size
            output = network.forward(Tensor(test_set.images[start:stop], dtype=config.dtype))
            logits[start:stop] = output.logits.data
            predictions[start:stop] = output.predictions

    labels = test_set.labels
    confusion = np.zeros((n_class, n_class), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    counts = confusion.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(counts > 0, np.diag(confusion) / np.maximum(counts, 1), np.nan)
    accuracy = float(np.mean(predictions == labels)) if len(test_set) else float("nan")
    return EvalResult(accuracy, per_class, counts, confusion, logits, predictions)
