import logging
from pathlib import Path

from blinker import signal

from faultfusion.schemas import HistoryRecord

logger = logging.getLogger("faultfusion")

EPOCH_COMPLETED = "epoch_completed"


class HistoryListener:
    """Append one JSON line per completed epoch of ``sender`` to ``path``."""

    def __init__(self, path: Path, sender: object) -> None:
        self._path = path
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._path.write_text("", encoding="utf-8")
        self.records: list[HistoryRecord] = []
        self._epoch_completed_signal = signal(EPOCH_COMPLETED)
        self._epoch_completed_signal.connect(self._on_epoch_completed, sender=sender)

    def _on_epoch_completed(self, _: object, record: HistoryRecord) -> None:
        self.records.append(record)
        with self._path.open("a", encoding="utf-8") as handle:
            handle.write(record.model_dump_json() + "\n")


class EpochLogListener:
    """Log a one-line summary per completed epoch of ``sender``."""

    def __init__(self, sender: object) -> None:
        self._epoch_completed_signal = signal(EPOCH_COMPLETED)
        self._epoch_completed_signal.connect(self._on_epoch_completed, sender=sender)

    def _on_epoch_completed(self, _: object, record: HistoryRecord) -> None:
        val = "n/a" if record.val_acc is None else f"{record.val_acc:.4f}"
        logger.info(
            "Epoch %d: loss %.5f (ce %.5f, triplet %.5f), val acc %s",
            record.epoch,
            record.loss_total,
            record.loss_ce,
            record.loss_triplet,
            val,
        )
