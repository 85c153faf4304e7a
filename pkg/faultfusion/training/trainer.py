"""
Mini-batch training with Adam.

Each epoch reshuffles the training set with a seeded generator, records one
tape per batch and publishes an ``epoch_completed`` signal carrying a
:class:`HistoryRecord`. The parameters with the best validation accuracy are
kept (the last epoch's when there is no validation set).
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from blinker import signal

from faultfusion.errors import DivergenceError, NonFiniteError
from faultfusion.model.network import FusionNetwork, eval_batches
from faultfusion.schemas import HistoryRecord
from faultfusion.signals.dataset import DatasetSplit, LabeledSet
from faultfusion.tensor import Adam, Tape
from faultfusion.training.history import EPOCH_COMPLETED
from faultfusion.training.losses import LossBreakdown, composite_loss

logger = logging.getLogger("faultfusion")

CHECKPOINT_FILE = "checkpoint.json"


@dataclass(frozen=True)
class TrainingResult:
    """Per-epoch history and where the kept parameters came from."""

    history: list[HistoryRecord]
    best_epoch: int
    best_val_acc: float | None
    empty_triplet_batches: int


class Trainer:
    """Fits a :class:`FusionNetwork` to a :class:`DatasetSplit`."""

    def __init__(self, network: FusionNetwork, run_dir: Path | None = None) -> None:
        self.network = network
        self.config = network.config
        self.run_dir = run_dir
        self._epoch_completed = signal(EPOCH_COMPLETED)
        seed = self.config.train.seed
        self._shuffle_rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
        self._mining_rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
        train = self.config.train
        self.optimizer = Adam(network.params, lr=train.lr, betas=train.betas, eps=train.eps)

    def train_batch(self, batch: LabeledSet) -> LossBreakdown:
        """One optimiser step on ``batch``."""
        self.network.params.zero_grad()
        try:
            with Tape() as tape:
                result = self.network.forward(batch.signals, batch.images)
                loss = composite_loss(
                    result, batch.labels, self.config.loss, self.config.train.switches, self._mining_rng
                )
                tape.backward(loss.total)
        except NonFiniteError as exc:
            msg = f"Training diverged: first non-finite value produced by op {exc.op!r}"
            raise DivergenceError(msg) from exc
        self.optimizer.step()
        return loss

    def accuracy(self, dataset: LabeledSet) -> float:
        """Fraction of ``dataset`` classified correctly."""
        logits = self.network.predict_logits(dataset.signals, dataset.images, self.config.train.batch_size)
        return float(np.mean(np.argmax(logits, axis=1) == dataset.labels))

    def fit(self, split: DatasetSplit) -> TrainingResult:
        """Run every configured epoch and leave the best parameters loaded (and checkpointed)."""
        train = split.train
        batch_size = self.config.train.batch_size
        history: list[HistoryRecord] = []
        best_state, best_epoch, best_val = None, -1, None
        empty_batches = 0

        for epoch in range(self.config.train.epochs):
            order = self._shuffle_rng.permutation(len(train))
            totals, ces, triplet_terms = [], [], []
            for rows in eval_batches(len(train), batch_size):
                loss = self.train_batch(train.subset(order[rows]))
                totals.append(loss.total.item())
                ces.append(loss.ce)
                triplet_terms.append(loss.triplet)
                empty_batches += int(loss.weight > 0 and loss.triplets == 0)

            val_acc = self.accuracy(split.validation) if split.validation is not None else None
            record = HistoryRecord(
                epoch=epoch,
                loss_total=float(np.mean(totals)),
                loss_ce=float(np.mean(ces)),
                loss_triplet=float(np.mean(triplet_terms)),
                val_acc=val_acc,
            )
            history.append(record)
            self._epoch_completed.send(self, record=record)

            if val_acc is None or best_val is None or val_acc > best_val:
                best_state, best_epoch, best_val = self.network.params.state(), epoch, val_acc

        if empty_batches:
            logger.warning("%d training batches had no valid triplet", empty_batches)
        if best_state is not None:
            self.network.params.load_state(best_state)
        logger.info("Kept parameters from epoch %d", best_epoch)
        if self.run_dir is not None:
            self.network.save(self.run_dir / CHECKPOINT_FILE, {"epoch": best_epoch, "val_acc": best_val})
        return TrainingResult(history, best_epoch, best_val, empty_batches)
