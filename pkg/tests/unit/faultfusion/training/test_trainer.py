import json
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from faultfusion.errors import DivergenceError, NonFiniteError
from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import DatasetSplit, build_dataset
from faultfusion.training.history import EpochLogListener, HistoryListener
from faultfusion.training.trainer import CHECKPOINT_FILE, Trainer

TWO_CLASSES = {
    "classes": [
        {"name": "healthy", "noise_floor": 0.0},
        {
            "name": "itsc",
            "noise_floor": 0.0,
            "signature": {"kind": "harmonic_imbalance", "orders": [3, 5], "rel_amps": [0.5, 0.4]},
        },
    ],
}


def _trainer(config: ExperimentConfig, split: DatasetSplit, run_dir: Path | None = None) -> Trainer:
    network = FusionNetwork(config, split.train.classes, split.train.signals.shape[1], (12, 12))
    return Trainer(network, run_dir)


def test_loss_decreases_on_separable_data(tiny_config: Callable[..., ExperimentConfig]) -> None:
    """On two noise-free classes the epoch loss falls and the last epoch is kept without validation."""
    config = tiny_config(data=TWO_CLASSES, train={"epochs": 20, "lr": 0.01})
    split = build_dataset(config)
    trainer = _trainer(config, split)

    result = trainer.fit(split)

    assert len(result.history) == 20
    assert result.history[-1].loss_total < result.history[0].loss_total
    assert result.best_epoch == 19
    assert result.best_val_acc is None


def test_listeners_receive_every_epoch(
    tiny_config: Callable[..., ExperimentConfig],
    tiny_split: DatasetSplit,
    tmp_path: Path,
    caplog: pytest.LogCaptureFixture,
) -> None:
    """history.jsonl gets one line per epoch and the log a one-line summary."""
    trainer = _trainer(tiny_config(), tiny_split, tmp_path)
    history = HistoryListener(tmp_path / "history.jsonl", trainer)
    _epoch_log = EpochLogListener(trainer)
    bystander = _trainer(tiny_config(), tiny_split)

    with caplog.at_level("INFO", logger="faultfusion"):
        trainer.fit(tiny_split)

    lines = (tmp_path / "history.jsonl").read_text().splitlines()
    assert [json.loads(line)["epoch"] for line in lines] == [0, 1]
    assert len(history.records) == 2
    assert "Epoch 1: loss" in caplog.text
    assert (tmp_path / CHECKPOINT_FILE).is_file()

    bystander.fit(tiny_split)
    assert len(history.records) == 2


def test_loss_components_reconstruct_the_total(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit
) -> None:
    """Per-epoch means obey total = CE + lambda * triplet."""
    trainer = _trainer(tiny_config(), tiny_split)
    for record in trainer.fit(tiny_split).history:
        assert record.loss_total == pytest.approx(record.loss_ce + 0.5 * record.loss_triplet, abs=1e-5)


def test_best_validation_epoch_is_kept(tiny_config: Callable[..., ExperimentConfig]) -> None:
    """With a validation set the reloaded parameters come from the best-scoring epoch."""
    config = tiny_config(data={"per_class": 12, "val_fraction": 0.25}, train={"epochs": 3})
    split = build_dataset(config)
    trainer = _trainer(config, split)

    result = trainer.fit(split)

    accuracies = [record.val_acc for record in result.history]
    assert result.best_val_acc == max(accuracies)
    assert result.best_epoch == accuracies.index(max(accuracies))
    assert trainer.accuracy(split.validation) == result.best_val_acc


def test_same_seed_trains_identically(tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit) -> None:
    """Initialisation, shuffling and mining are all seeded."""
    first = _trainer(tiny_config(), tiny_split)
    second = _trainer(tiny_config(), tiny_split)
    first.fit(tiny_split)
    second.fit(tiny_split)

    for name, values in first.network.params.state().items():
        np.testing.assert_array_equal(values, second.network.params[name].numpy())


def test_non_finite_forward_is_reported_as_divergence(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit, monkeypatch: pytest.MonkeyPatch
) -> None:
    """The offending op's name is carried into the divergence error."""
    trainer = _trainer(tiny_config(), tiny_split)

    def explode(*_: object) -> None:
        raise NonFiniteError("exp")

    monkeypatch.setattr(trainer.network, "forward", explode)

    with pytest.raises(DivergenceError, match="'exp'"):
        trainer.train_batch(tiny_split.train)
