"""Run directories and their ``run.json`` manifests."""

import datetime
import json
import logging
from pathlib import Path

import pandas as pd

from faultfusion.schemas import ExperimentConfig, MetricsReport, RunManifest

logger = logging.getLogger("faultfusion")

MANIFEST_FILE = "run.json"
METRICS_FILE = "metrics.json"
CONFUSION_FILE = "confusion.csv"


def run_name(command: str, config: ExperimentConfig) -> str:
    """``<command>-<first 8 hex of the config hash>``."""
    return f"{command}-{config.config_hash(command)[:8]}"


def run_dir(out: Path, command: str, config: ExperimentConfig) -> Path:
    """``<out>/<run name>``, created if absent."""
    path = out / run_name(command, config)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(
    directory: Path,
    command: str,
    config: ExperimentConfig,
    artifacts: list[str],
    timings: dict[str, float] | None = None,
) -> RunManifest:
    """Record what ran, with which config, and what it produced."""
    manifest = RunManifest(
        command=command,
        config_hash=config.config_hash(command),
        seed=config.train.seed,
        created_at=datetime.datetime.now(tz=datetime.timezone.utc).isoformat(),
        config=config.model_dump(mode="json"),
        artifacts=sorted(artifacts),
        timings=timings or {},
    )
    (directory / MANIFEST_FILE).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("Run %s written to %s", command, directory)
    return manifest


def write_metrics(directory: Path, report: MetricsReport) -> list[str]:
    """Write ``metrics.json`` and ``confusion.csv``; returns their file names."""
    # Latency goes to run.json timings; metrics.json stays identical across reruns.
    document = report.model_dump(mode="json", exclude={"latency_ms_per_sample"})
    (directory / METRICS_FILE).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    frame = pd.DataFrame(report.confusion, index=report.classes, columns=report.classes)
    frame.index.name = "true\\predicted"
    frame.to_csv(directory / CONFUSION_FILE)
    return [METRICS_FILE, CONFUSION_FILE]


def read_metrics(directory: Path) -> MetricsReport | None:
    """The metrics a run wrote, if any."""
    path = directory / METRICS_FILE
    if not path.is_file():
        return None
    return MetricsReport.model_validate_json(path.read_text(encoding="utf-8"))
