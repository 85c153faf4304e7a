"""
Command-line entry point (``mmhcan``).

Every command reads one JSON :class:`ExperimentConfig` (file, then ``--set``
overrides, then the ``--seed``/``--regime`` shortcuts), writes into
``<out>/<command>-<hash8>/`` and exits 0 on success, 1 on a user error and 2
when an internal invariant breaks.
"""

import argparse
import json
import logging
import time
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from faultfusion.config import settings
from faultfusion.errors import ConfigError, InvariantError, UserError
from faultfusion.experiments.ablation import run_ablation, write_ablation
from faultfusion.experiments.report import render_report
from faultfusion.experiments.robustness import run_robustness, write_robustness
from faultfusion.experiments.runs import run_dir, run_name, write_manifest, write_metrics
from faultfusion.logging_config import setup_logging
from faultfusion.model.hypergraph import dump_graphs
from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import LabeledSet, build_dataset, resolve_regime
from faultfusion.spectral.stft import Spectrogram, write_cache, write_preview
from faultfusion.tensor import set_default_dtype
from faultfusion.training.history import EpochLogListener, HistoryListener
from faultfusion.training.metrics import evaluate
from faultfusion.training.trainer import CHECKPOINT_FILE, Trainer

logger = logging.getLogger("faultfusion")

COMMANDS = ("gen-data", "train", "eval", "ablate", "perturb-eval", "report")
EXIT_OK, EXIT_USER_ERROR, EXIT_INVARIANT = 0, 1, 2


# --- configuration ---


def resolve_config_path(value: str) -> Path:
    """A path as given, or a bare name looked up as ``<configs_path>/<name>.json``."""
    path = Path(value)
    if path.is_file():
        return path
    named = Path(settings.configs_path) / f"{value}.json"
    if named.is_file():
        return named
    msg = f"Config file {value} not found (also tried {named})"
    raise ConfigError(msg)


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split ``a.b.c=value``; the value is JSON when it parses, otherwise the raw string."""
    key, separator, raw = text.partition("=")
    if not separator or not key.strip():
        msg = f"Override {text!r} is not of the form key=value"
        raise ConfigError(msg)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_override(document: dict[str, Any], keys: list[str], value: object) -> None:
    """Set a dotted key in a nested dict, creating intermediate sections."""
    node = document
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            msg = f"Cannot set {'.'.join(keys)}: {key} is not a section"
            raise ConfigError(msg)
        node = child
    node[keys[-1]] = value


def load_config(
    path: str | None,
    overrides: Sequence[str] = (),
    seed: int | None = None,
    regime: str | None = None,
) -> ExperimentConfig:
    """Defaults, then the file, then ``--set`` overrides, then the shortcut flags."""
    document: dict[str, Any] = {}
    if path:
        config_path = resolve_config_path(path)
        try:
            document = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            msg = f"Config file {config_path} is not valid JSON: {exc}"
            raise ConfigError(msg) from exc
        if not isinstance(document, dict):
            msg = f"Config file {config_path} must hold a JSON object"
            raise ConfigError(msg)
    for override in overrides:
        apply_override(document, *parse_override(override))
    if seed is not None:
        apply_override(document, ["train", "seed"], seed)
    if regime is not None:
        apply_override(document, ["stft", "regime"], regime)
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as exc:
        msg = f"Invalid config: {exc}"
        raise ConfigError(msg) from exc


# --- commands ---


def _image_shape(config: ExperimentConfig) -> tuple[int, int]:
    return config.stft.image_height, config.stft.image_width


def _checkpoint_path(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    if args.checkpoint:
        return Path(args.checkpoint)
    return Path(args.out) / run_name("train", config) / CHECKPOINT_FILE


def _write_spectrograms(
    directory: Path, name: str, labeled: LabeledSet, config: ExperimentConfig, *, previews: bool
) -> None:
    if labeled.images is None:
        return
    regime = resolve_regime(config)
    target = directory / "spectrograms" / name
    target.mkdir(parents=True, exist_ok=True)
    for index, (image, label) in enumerate(zip(labeled.images, labeled.labels, strict=True)):
        spec = Spectrogram(image, regime.freq_resolution_hz, regime.time_step_s, labeled.classes[label])
        write_cache(target / f"{index:05d}.ffspec", spec)
        if previews:
            write_preview(target / f"{index:05d}.png", spec)


def cmd_gen_data(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    """Build the dataset and cache every spectrogram."""
    directory = run_dir(Path(args.out), "gen-data", config)
    split = build_dataset(config)
    regime = resolve_regime(config)
    parts = {"train": split.train, "test": split.test}
    if split.validation is not None:
        parts["validation"] = split.validation
    summary = {
        "classes": list(split.train.classes),
        "counts": {name: part.class_counts().tolist() for name, part in parts.items()},
        "regime": {
            "name": regime.name,
            "sample_rate_hz": regime.sample_rate_hz,
            "segment_length": regime.segment_length,
            "freq_resolution_hz": regime.freq_resolution_hz,
            "time_step_s": regime.time_step_s,
            "frame_count": regime.frame_count,
        },
    }
    for name, part in parts.items():
        _write_spectrograms(directory, name, part, config, previews=args.previews)
    (directory / "dataset.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(directory, "gen-data", config, ["dataset.json", "spectrograms"])
    return directory


def cmd_train(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    """Train, checkpoint at the best validation accuracy and evaluate on the test split."""
    directory = run_dir(Path(args.out), "train", config)
    split = build_dataset(config)
    network = FusionNetwork(config, split.train.classes, split.train.signals.shape[1], _image_shape(config))
    trainer = Trainer(network, directory)
    # Receivers are weakly referenced; the listeners must outlive fit().
    history, _epoch_log = HistoryListener(directory / "history.jsonl", trainer), EpochLogListener(trainer)
    started = time.perf_counter()
    trainer.fit(split)
    timings = {"train_s": time.perf_counter() - started}
    logger.debug("Recorded %d epochs", len(history.records))

    artifacts = [CHECKPOINT_FILE, "history.jsonl"]
    report = evaluate(network, split.test, config.train.batch_size)
    artifacts += write_metrics(directory, report)
    timings["latency_ms_per_sample"] = report.latency_ms_per_sample or 0.0
    if args.dump_graphs:
        first = split.train.subset(np.arange(min(config.train.batch_size, len(split.train))))
        dump_graphs(network.forward(first.signals, first.images).graphs, directory / "graphs")
        artifacts.append("graphs")
    write_manifest(directory, "train", config, artifacts, timings)
    return directory


def cmd_eval(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    """Evaluate a checkpoint on the test split of the data it was trained on."""
    network, _ = FusionNetwork.from_checkpoint(_checkpoint_path(args, config))
    directory = run_dir(Path(args.out), "eval", config)
    split = build_dataset(network.config)
    report = evaluate(network, split.test, network.config.train.batch_size)
    artifacts = write_metrics(directory, report)
    write_manifest(directory, "eval", config, artifacts, {"latency_ms_per_sample": report.latency_ms_per_sample or 0.0})
    return directory


def cmd_ablate(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    """Train and evaluate all eight switch combinations."""
    directory = run_dir(Path(args.out), "ablate", config)
    rows = run_ablation(config)
    write_manifest(directory, "ablate", config, [write_ablation(directory, rows)])
    return directory


def cmd_perturb_eval(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    """Evaluate a checkpoint on clean and corrupted test data."""
    network, _ = FusionNetwork.from_checkpoint(_checkpoint_path(args, config))
    # Perturbation settings come from the command line config; the data must match the checkpoint.
    network.config = network.config.model_copy(update={"robustness": config.robustness})
    directory = run_dir(Path(args.out), "perturb-eval", config)
    rows = run_robustness(network, build_dataset(network.config).test)
    artifacts = [write_robustness(directory, rows), *write_metrics(directory, rows[0].report)]
    write_manifest(directory, "perturb-eval", config, artifacts)
    return directory


def cmd_report(args: argparse.Namespace, _: ExperimentConfig) -> Path:
    """Summarise every run under ``--out``."""
    return render_report(Path(args.out))


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "perturb-eval": cmd_perturb_eval,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    """The ``mmhcan`` argument grammar."""
    parser = argparse.ArgumentParser(prog="mmhcan", description="Multimodal hypergraph fault diagnosis.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run config, or the name of one under the configs directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--out", default=settings.output_path, help="parent directory for run artifacts")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--regime", help="STFT regime preset, e.g. rotor, bearing, stator-vib, stator-cur, desk")
    parser.add_argument("--checkpoint", help="checkpoint for eval/perturb-eval (default: the matching train run)")
    parser.add_argument("--dump-graphs", action="store_true", help="train: write the first batch's hypergraphs")
    parser.add_argument("--previews", action="store_true", help="gen-data: also write PNG spectrogram previews")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(
        log_level=settings.log_level,
        third_party_log_level=settings.third_party_log_level,
        logs_path=settings.logs_path,
    )
    try:
        config = load_config(args.config, args.overrides, args.seed, args.regime)
        set_default_dtype(config.train.precision)
        result = HANDLERS[args.command](args, config)
    except UserError as exc:
        logger.error("%s", exc)  # noqa: TRY400
        return EXIT_USER_ERROR
    except InvariantError:
        logger.exception("Internal invariant violated")
        return EXIT_INVARIANT
    logger.info("%s finished: %s", args.command, result)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
