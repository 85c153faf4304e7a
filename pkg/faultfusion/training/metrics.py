"""Classification metrics for one evaluation pass, computed with scikit-learn."""

import logging
import time

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support, roc_auc_score

from faultfusion.errors import ContractError
from faultfusion.model.fusion import classify
from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import ClassMetrics, MetricsReport
from faultfusion.signals.dataset import LabeledSet

logger = logging.getLogger("faultfusion")


def one_vs_rest_auc(labels: np.ndarray, probabilities: np.ndarray) -> float | None:
    """
    Macro average of the per-class one-vs-rest ROC AUC over the classes present in ``labels``.

    Undefined (None) when fewer than two classes are present.
    """
    present = np.unique(labels)
    if present.size < 2:  # noqa: PLR2004
        return None
    return float(np.mean([roc_auc_score(labels == c, probabilities[:, c]) for c in present]))


def compute_metrics(
    labels: np.ndarray,
    probabilities: np.ndarray,
    classes: tuple[str, ...] | list[str],
    latency_ms_per_sample: float | None = None,
) -> MetricsReport:
    """Build a :class:`MetricsReport` from true labels and predicted class probabilities."""
    labels = np.asarray(labels)
    if labels.size == 0:
        msg = "cannot compute metrics for an empty test set"
        raise ContractError(msg)
    class_ids = list(range(len(classes)))
    predictions = np.argmax(probabilities, axis=1)
    matrix = confusion_matrix(labels, predictions, labels=class_ids)
    precision, recall, f1, support = precision_recall_fscore_support(
        labels, predictions, labels=class_ids, zero_division=0
    )
    return MetricsReport(
        classes=list(classes),
        confusion=matrix.astype(int).tolist(),
        accuracy=float(np.trace(matrix) / matrix.sum()),
        precision=float(np.mean(precision)),
        recall=float(np.mean(recall)),
        f1=float(np.mean(f1)),
        auc=one_vs_rest_auc(labels, probabilities),
        per_class=[
            ClassMetrics(name=name, precision=float(p), recall=float(r), f1=float(f), support=int(s))
            for name, p, r, f, s in zip(classes, precision, recall, f1, support, strict=True)
        ],
        samples=int(labels.size),
        latency_ms_per_sample=latency_ms_per_sample,
    )


def evaluate(network: FusionNetwork, dataset: LabeledSet, batch_size: int) -> MetricsReport:
    """Score ``dataset`` in one pass and time it."""
    started = time.perf_counter()
    logits = network.predict_logits(dataset.signals, dataset.images, batch_size)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    report = compute_metrics(dataset.labels, classify(logits), network.classes, elapsed_ms / len(dataset))
    logger.info("Evaluated %d samples: accuracy %.4f, macro F1 %.4f", report.samples, report.accuracy, report.f1)
    return report
