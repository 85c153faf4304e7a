from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from faultfusion.experiments.robustness import base_frequencies, run_robustness, write_robustness
from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import DatasetSplit, LabeledSet
from faultfusion.signals.perturb import Perturbation
from faultfusion.training.metrics import evaluate


def _labeled(classes: tuple[str, ...], labels: list[int]) -> LabeledSet:
    return LabeledSet(np.zeros((len(labels), 8)), np.array(labels), classes)


def test_base_frequencies_follow_class_recipes(tiny_config: Callable[..., ExperimentConfig]) -> None:
    """Each row gets its class's fundamental unless an override is configured."""
    bearing = tiny_config(data={"family": "bearing"})
    test = _labeled(("healthy", "ball"), [0, 1, 1])

    assert base_frequencies(bearing, test).tolist() == [30.0, 30.0, 30.0]
    assert base_frequencies(tiny_config(), test).tolist() == [60.0, 60.0, 60.0]

    overridden = tiny_config(robustness={"base_freq_hz": 50.0})
    assert base_frequencies(overridden, test).tolist() == [50.0, 50.0, 50.0]


def test_clean_row_matches_plain_evaluation(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit, tmp_path: Path
) -> None:
    """The clean row scores the untouched test set; the other rows report their change against it."""
    config = tiny_config()
    network = FusionNetwork(config, tiny_split.train.classes, tiny_split.train.signals.shape[1], (12, 12))

    rows = run_robustness(network, tiny_split.test)

    assert [row.perturbation for row in rows] == [
        Perturbation.CLEAN,
        Perturbation.GAUSSIAN,
        Perturbation.HARMONICS,
        Perturbation.SPIKES,
    ]
    clean = evaluate(network, tiny_split.test, config.train.batch_size)
    assert rows[0].report.confusion == clean.confusion
    assert rows[0].accuracy_delta == 0.0
    for row in rows[1:]:
        assert row.accuracy_delta == pytest.approx(row.report.accuracy - rows[0].report.accuracy)

    frame = pd.read_csv(tmp_path / write_robustness(tmp_path, rows))
    assert list(frame.columns) == ["perturbation", "accuracy", "f1", "accuracy_delta"]
    assert frame["perturbation"].tolist() == ["clean", "gaussian_noise", "harmonics", "spikes"]
