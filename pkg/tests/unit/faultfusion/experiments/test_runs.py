import json
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd

from faultfusion.experiments.runs import read_metrics, run_dir, write_manifest, write_metrics
from faultfusion.schemas import ExperimentConfig, MetricsReport, RunManifest
from faultfusion.training.metrics import compute_metrics


def _report() -> MetricsReport:
    labels = np.array([0, 0, 1, 1, 2, 2])
    probabilities = np.eye(3)[[0, 1, 1, 1, 2, 0]]
    return compute_metrics(labels, probabilities, ["healthy", "sidebands", "spikes"], latency_ms_per_sample=1.5)


def test_run_dir_is_named_after_command_and_hash(tiny_config: Callable[..., ExperimentConfig], tmp_path: Path) -> None:
    """The directory name carries the first eight hex digits of the config hash and is stable across calls."""
    config = tiny_config()

    first = run_dir(tmp_path, "train", config)
    second = run_dir(tmp_path, "train", config)

    assert first == second
    assert first.is_dir()
    assert first.name == f"train-{config.config_hash('train')[:8]}"
    assert run_dir(tmp_path, "ablate", config) != first
    assert run_dir(tmp_path, "train", tiny_config(train={"seed": 1})) != first


def test_manifest_records_config_and_artifacts(tiny_config: Callable[..., ExperimentConfig], tmp_path: Path) -> None:
    """run.json holds the command, the full config, sorted artifacts and timings."""
    config = tiny_config()

    write_manifest(tmp_path, "train", config, ["metrics.json", "checkpoint.json"], {"train_s": 2.0})

    manifest = RunManifest.model_validate_json((tmp_path / "run.json").read_text(encoding="utf-8"))
    assert manifest.command == "train"
    assert manifest.config_hash == config.config_hash("train")
    assert manifest.seed == 0
    assert manifest.artifacts == ["checkpoint.json", "metrics.json"]
    assert manifest.timings == {"train_s": 2.0}
    assert ExperimentConfig.model_validate(manifest.config) == config


def test_metrics_files(tmp_path: Path) -> None:
    """metrics.json leaves latency out and confusion.csv is labelled on both axes."""
    report = _report()

    names = write_metrics(tmp_path, report)

    assert names == ["metrics.json", "confusion.csv"]
    document = json.loads((tmp_path / "metrics.json").read_text(encoding="utf-8"))
    assert "latency_ms_per_sample" not in document
    assert document["accuracy"] == report.accuracy

    frame = pd.read_csv(tmp_path / "confusion.csv", index_col=0)
    assert list(frame.columns) == ["healthy", "sidebands", "spikes"]
    assert list(frame.index) == ["healthy", "sidebands", "spikes"]
    assert frame.to_numpy().tolist() == report.confusion

    restored = read_metrics(tmp_path)
    assert restored is not None
    assert restored.confusion == report.confusion
    assert restored.latency_ms_per_sample is None


def test_read_metrics_without_a_file(tmp_path: Path) -> None:
    """A directory without metrics.json has no metrics."""
    assert read_metrics(tmp_path) is None
