"""Learning, ablation, robustness and determinism checks on trained networks."""

import json
import logging
from collections.abc import Iterator
from pathlib import Path
from typing import Any

import pytest

from faultfusion.config import settings
from faultfusion.experiments.ablation import ABLATION_ROWS, AblationRow, run_ablation
from faultfusion.experiments.robustness import run_robustness
from faultfusion.main import EXIT_OK, load_config, main
from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import DatasetSplit, build_dataset
from faultfusion.signals.perturb import Perturbation
from faultfusion.training.metrics import evaluate
from faultfusion.training.trainer import CHECKPOINT_FILE, Trainer

BENCHMARK_CONFIG = Path(__file__).parents[3] / "configs" / "benchmark.json"
STEP_SLACK = 0.005
MAX_ROBUSTNESS_DROP = 0.05

# Healthy vs a strong bearing-style burst train: every single stream can separate them.
SEPARABLE: dict[str, Any] = {
    "data": {
        "classes": [
            {"name": "healthy", "noise_floor": 0.01},
            {
                "name": "outer_race",
                "noise_floor": 0.01,
                "signature": {"kind": "impulse_train", "rate_hz": 25.0, "decay": 200.0, "rel_amp": 1.0},
            },
        ],
        "per_class": 40,
        "split": 0.5,
        "val_fraction": 0.0,
        "segment_length": 256,
    },
    "stft": {"image_height": 12, "image_width": 12},
    "encoder": {
        "embed_dim": 6,
        "temporal": {"conv1_filters": 3, "conv1_kernel": 5, "conv2_filters": 4, "conv2_kernel": 3},
        "spectral": {"blocks": 1, "channels": [4]},
    },
    "hypergraph": {"k": 2, "theta_intra": 0.5, "theta_cross": 0.5},
    "hgnn": {"operator": "smoothing_I_minus_L"},
    "train": {"lr": 0.01, "epochs": 15, "batch_size": 8, "seed": 0},
}


@pytest.fixture(scope="module")
def separable_config() -> ExperimentConfig:
    """The two-class config shared by the ablation and robustness checks."""
    return ExperimentConfig.model_validate(SEPARABLE)


@pytest.fixture(scope="module")
def separable_split(separable_config: ExperimentConfig) -> DatasetSplit:
    """20 training and 20 test segments per class."""
    return build_dataset(separable_config)


@pytest.fixture(scope="module")
def ablation_rows(separable_config: ExperimentConfig, separable_split: DatasetSplit) -> list[AblationRow]:
    """Every ablation combination trained once on the shared split."""
    return run_ablation(separable_config, separable_split)


@pytest.fixture
def isolated_logging(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Send the log file to tmp_path and drop the handlers main() attaches."""
    monkeypatch.setattr(settings, "logs_path", str(tmp_path / "logs"))
    root_logger = logging.getLogger()
    saved_handlers, saved_level = root_logger.handlers[:], root_logger.level
    yield
    for handler in root_logger.handlers:
        if handler not in saved_handlers:
            handler.close()
    root_logger.handlers = saved_handlers
    root_logger.setLevel(saved_level)


def test_ablation_accuracy_rises_along_the_switch_chain(ablation_rows: list[AblationRow]) -> None:
    """temporal <= +spectral <= +cross <= +contrastive <= full, each step within half a point."""
    assert [row.switches for row in ablation_rows] == list(ABLATION_ROWS)
    chain = [ablation_rows[index] for index in (0, 3, 5, 6, 7)]
    for weaker, stronger in zip(chain, chain[1:], strict=False):
        assert weaker.report.accuracy <= stronger.report.accuracy + STEP_SLACK, (
            weaker.switches.label(),
            stronger.switches.label(),
        )


def test_full_model_beats_every_single_stream(ablation_rows: list[AblationRow]) -> None:
    """The full model is at least as accurate as the temporal, spectral and cross rows alone."""
    full = ablation_rows[-1]
    assert full.switches == ABLATION_ROWS[-1]
    for single in ablation_rows[:3]:
        assert single.report.accuracy <= full.report.accuracy + STEP_SLACK, single.switches.label()
    assert full.report.accuracy >= 0.9


def test_perturbations_cost_at_most_five_points(
    separable_config: ExperimentConfig, separable_split: DatasetSplit
) -> None:
    """Noise, injected harmonics and spikes each lower the full model's accuracy by at most 5 points."""
    network = FusionNetwork(separable_config, separable_split.train.classes, 256, (12, 12))
    Trainer(network).fit(separable_split)

    rows = run_robustness(network, separable_split.test)

    assert [row.perturbation for row in rows] == [
        Perturbation.CLEAN,
        Perturbation.GAUSSIAN,
        Perturbation.HARMONICS,
        Perturbation.SPIKES,
    ]
    assert rows[0].report.accuracy >= 0.9
    for row in rows[1:]:
        assert row.accuracy_delta >= -MAX_ROBUSTNESS_DROP, (row.perturbation, row.accuracy_delta)


@pytest.mark.usefixtures("isolated_logging")
def test_same_seed_reruns_are_bit_identical(tmp_path: Path) -> None:
    """Two train runs from one config write byte-for-byte equal checkpoints, metrics and history."""
    config_path = tmp_path / "separable.json"
    short = SEPARABLE | {"train": SEPARABLE["train"] | {"epochs": 3}}
    config_path.write_text(json.dumps(short), encoding="utf-8")
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["train", "--config", str(config_path), "--out", str(out)]) == EXIT_OK
        (run,) = out.glob("train-*")
        outputs.append(run)

    first, second = outputs
    assert first.name == second.name
    for artifact in (CHECKPOINT_FILE, "metrics.json", "history.jsonl"):
        assert (first / artifact).read_bytes() == (second / artifact).read_bytes(), artifact


@pytest.mark.slow
def test_benchmark_reaches_ninety_five_percent() -> None:
    """The shipped benchmark config trains the full four-class model to at least 95% test accuracy."""
    config = load_config(str(BENCHMARK_CONFIG))
    split = build_dataset(config)
    image_shape = (config.stft.image_height, config.stft.image_width)
    network = FusionNetwork(config, split.train.classes, split.train.signals.shape[1], image_shape)

    result = Trainer(network).fit(split)
    report = evaluate(network, split.test, config.train.batch_size)

    assert len(split.train.classes) == 4
    assert len(result.history) <= 60
    assert report.accuracy >= 0.95, report.accuracy
