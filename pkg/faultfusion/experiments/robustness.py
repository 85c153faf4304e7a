"""Accuracy of a trained network on clean and corrupted copies of the test set."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import ExperimentConfig, MetricsReport
from faultfusion.signals.dataset import LabeledSet, class_specs, featurize, resolve_regime
from faultfusion.signals.perturb import Perturbation, apply_perturbation
from faultfusion.training.metrics import evaluate

logger = logging.getLogger("faultfusion")

ROBUSTNESS_FILE = "robustness.csv"
DEFAULT_BASE_FREQ_HZ = 60.0


@dataclass(frozen=True)
class RobustnessRow:
    """Metrics under one perturbation and the accuracy change against the clean row."""

    perturbation: Perturbation
    report: MetricsReport
    accuracy_delta: float


def base_frequencies(config: ExperimentConfig, test: LabeledSet) -> np.ndarray:
    """Fundamental of every test row: the configured override, else the row's class recipe."""
    if config.robustness.base_freq_hz is not None:
        return np.full(len(test), config.robustness.base_freq_hz)
    if config.data.manifest:
        return np.full(len(test), DEFAULT_BASE_FREQ_HZ)
    by_name = {spec.name: spec.base_freq_hz for spec in class_specs(config)}
    per_class = np.array([by_name.get(name, DEFAULT_BASE_FREQ_HZ) for name in test.classes])
    return per_class[test.labels]


def run_robustness(network: FusionNetwork, test: LabeledSet) -> list[RobustnessRow]:
    """Evaluate the clean test set, then each corruption in turn."""
    config = network.config
    regime = resolve_regime(config)
    freqs = base_frequencies(config, test)
    batch_size = config.train.batch_size
    clean = evaluate(network, test, batch_size)
    rows = [RobustnessRow(Perturbation.CLEAN, clean, 0.0)]
    for kind in (Perturbation.GAUSSIAN, Perturbation.HARMONICS, Perturbation.SPIKES):
        signals = apply_perturbation(
            test.signals, kind, config.robustness, base_freqs_hz=freqs, sample_rate_hz=regime.sample_rate_hz
        )
        corrupted = featurize(
            LabeledSet(signals, test.labels, test.classes),
            regime,
            config.stft.image_height,
            config.stft.image_width,
        )
        report = evaluate(network, corrupted, batch_size)
        rows.append(RobustnessRow(kind, report, report.accuracy - clean.accuracy))
        logger.info("%s: accuracy %.4f (%+.4f)", kind.value, report.accuracy, report.accuracy - clean.accuracy)
    return rows


def write_robustness(directory: Path, rows: list[RobustnessRow]) -> str:
    """Write ``robustness.csv`` and return its file name."""
    frame = pd.DataFrame.from_records(
        [
            {
                "perturbation": row.perturbation.value,
                "accuracy": row.report.accuracy,
                "f1": row.report.f1,
                "accuracy_delta": row.accuracy_delta,
            }
            for row in rows
        ]
    )
    frame.to_csv(directory / ROBUSTNESS_FILE, index=False, float_format="%.6f")
    return ROBUSTNESS_FILE
