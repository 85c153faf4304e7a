"""
Balanced, deterministic train/validation/test splits of normalised segments.

Every split keeps classes exactly balanced: each class contributes the same
number of segments, shuffled with a per-run seed before being cut.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, replace

import numpy as np

from faultfusion.errors import ConfigError, DataError
from faultfusion.schemas import ExperimentConfig, SynthClassSpec
from faultfusion.signals.base import RawSignal, SignalSegment
from faultfusion.signals.csv_io import load_manifest
from faultfusion.signals.segment import segment
from faultfusion.signals.synth import family_classes, synthesize
from faultfusion.spectral.stft import Regime, get_regime, spectrogram_images

logger = logging.getLogger("faultfusion")


@dataclass(frozen=True)
class LabeledSet:
    """Segments of one split: ``signals`` is N × T, ``images`` (once featurised) N × H × W."""

    signals: np.ndarray
    labels: np.ndarray
    classes: tuple[str, ...]
    images: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.labels.size)

    def subset(self, indices: np.ndarray) -> "LabeledSet":
        """Rows at ``indices``, in that order."""
        images = None if self.images is None else self.images[indices]
        return LabeledSet(self.signals[indices], self.labels[indices], self.classes, images)

    def class_counts(self) -> np.ndarray:
        """Number of rows per class index."""
        return np.bincount(self.labels, minlength=len(self.classes))


@dataclass(frozen=True)
class DatasetSplit:
    """The splits every training and evaluation command works from."""

    train: LabeledSet
    test: LabeledSet
    validation: LabeledSet | None = None


def _class_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, 0, index]).generate_state(1)[0])


def _stack(segments: list[SignalSegment], label: int) -> tuple[np.ndarray, np.ndarray]:
    values = np.stack([s.values for s in segments]) if segments else np.empty((0, 0))
    return values, np.full(len(segments), label, dtype=np.int64)


def split_segments(
    grouped: list[list[SignalSegment]],
    classes: tuple[str, ...],
    split: float,
    seed: int,
) -> DatasetSplit:
    """
    Shuffle each class's segments and cut the first ``round(n * split)`` off as training data.

    All groups must be the same size.
    """
    per_class = len(grouped[0])
    if any(len(group) != per_class for group in grouped):
        msg = "every class must contribute the same number of segments"
        raise DataError(msg)
    n_train = round(per_class * split)
    if not 0 < n_train < per_class:
        msg = f"{per_class} segments per class cannot be split {split:.2f}/{1 - split:.2f} with both sides non-empty"
        raise ConfigError(msg)

    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for label, group in enumerate(grouped):
        order = rng.permutation(per_class)
        train_parts.append(_stack([group[i] for i in order[:n_train]], label))
        test_parts.append(_stack([group[i] for i in order[n_train:]], label))

    def merge(parts: list[tuple[np.ndarray, np.ndarray]]) -> LabeledSet:
        return LabeledSet(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), classes)

    return DatasetSplit(merge(train_parts), merge(test_parts))


def make_dataset(  # noqa: PLR0913
    specs: list[SynthClassSpec],
    per_class: int,
    split: float,
    seed: int,
    *,
    segment_length: int,
    sample_rate_hz: float,
) -> DatasetSplit:
    """Synthesise ``per_class`` segments for every class and split them."""
    if per_class < 2:  # noqa: PLR2004
        msg = f"per_class must be at least 2, got {per_class}"
        raise ConfigError(msg)
    if not 0 < split < 1:
        msg = f"split must lie in (0, 1), got {split}"
        raise ConfigError(msg)
    names = tuple(spec.name for spec in specs)
    if len(set(names)) != len(names):
        msg = f"class names must be unique, got {list(names)}"
        raise ConfigError(msg)

    grouped = []
    for index, spec in enumerate(specs):
        duration = per_class * segment_length / sample_rate_hz
        signal = synthesize(spec, duration, sample_rate_hz, _class_seed(seed, index))
        grouped.append(segment(signal, segment_length)[:per_class])
    logger.info("Synthesised %d classes x %d segments of %d samples", len(specs), per_class, segment_length)
    return split_segments(grouped, names, split, seed)


def dataset_from_signals(
    signals: list[RawSignal],
    split: float,
    seed: int,
    *,
    segment_length: int,
    sample_rate_hz: float,
    per_class: int | None = None,
) -> DatasetSplit:
    """
    Segment ingested recordings and split them, balanced down to the smallest class.

    Several recordings may share a label; their segments are pooled.
    """
    pooled: dict[str, list[SignalSegment]] = defaultdict(list)
    for signal in signals:
        if not np.isclose(signal.sample_rate_hz, sample_rate_hz):
            msg = f"recording {signal.label!r} is sampled at {signal.sample_rate_hz} Hz, expected {sample_rate_hz}"
            raise DataError(msg)
        pooled[signal.label].extend(segment(signal, segment_length))

    classes = tuple(sorted(pooled))
    available = min(len(pooled[name]) for name in classes)
    count = min(available, per_class) if per_class else available
    if count < 2:  # noqa: PLR2004
        msg = f"need at least 2 segments per class, the smallest class has {available}"
        raise DataError(msg)
    if any(len(pooled[name]) > count for name in classes):
        logger.warning("Balancing classes down to %d segments each", count)
    return split_segments([pooled[name][:count] for name in classes], classes, split, seed)


def split_validation(train: LabeledSet, fraction: float, seed: int) -> tuple[LabeledSet, LabeledSet | None]:
    """Carve ``round(n * fraction)`` rows per class out of ``train`` for model selection."""
    if fraction <= 0:
        return train, None
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    keep, held_out = [], []
    for label in range(len(train.classes)):
        rows = rng.permutation(np.flatnonzero(train.labels == label))
        n_val = min(max(1, round(rows.size * fraction)), rows.size - 1)
        held_out.append(rows[:n_val])
        keep.append(rows[n_val:])
    return train.subset(np.sort(np.concatenate(keep))), train.subset(np.sort(np.concatenate(held_out)))


def featurize(labeled: LabeledSet, regime: Regime, height: int, width: int) -> LabeledSet:
    """Attach the spectrogram image of every segment."""
    return replace(labeled, images=spectrogram_images(labeled.signals, regime, height, width))


def resolve_regime(config: ExperimentConfig) -> Regime:
    """The regime preset with the config's rate, length and window overrides applied."""
    return get_regime(config.stft.regime).with_overrides(
        sample_rate_hz=config.data.sample_rate_hz,
        segment_length=config.data.segment_length,
        window=config.stft.window,
    )


def class_specs(config: ExperimentConfig) -> list[SynthClassSpec]:
    """Explicit ``data.classes`` if given, else the named family preset."""
    if config.data.classes:
        return list(config.data.classes)
    return family_classes(config.data.family, config.data.noise_floor)


def build_dataset(config: ExperimentConfig) -> DatasetSplit:
    """Produce the featurised train/validation/test splits a config describes."""
    regime = resolve_regime(config)
    seed = config.train.seed
    if config.data.manifest:
        split = dataset_from_signals(
            load_manifest(config.data.manifest),
            config.data.split,
            seed,
            segment_length=regime.segment_length,
            sample_rate_hz=regime.sample_rate_hz,
            per_class=config.data.per_class,
        )
    else:
        split = make_dataset(
            class_specs(config),
            config.data.per_class,
            config.data.split,
            seed,
            segment_length=regime.segment_length,
            sample_rate_hz=regime.sample_rate_hz,
        )

    train, validation = split_validation(split.train, config.data.val_fraction, seed)
    height, width = config.stft.image_height, config.stft.image_width
    return DatasetSplit(
        featurize(train, regime, height, width),
        featurize(split.test, regime, height, width),
        None if validation is None else featurize(validation, regime, height, width),
    )
