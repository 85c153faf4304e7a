from collections.abc import Callable
from typing import Any

import pytest

from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import DatasetSplit, build_dataset


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        merged[key] = _merge(merged[key], value) if isinstance(value, dict) and key in merged else value
    return merged


TINY = {
    "data": {"per_class": 8, "split": 0.75, "val_fraction": 0.0, "segment_length": 256, "noise_floor": 0.02},
    "stft": {"image_height": 12, "image_width": 12},
    "encoder": {
        "embed_dim": 6,
        "temporal": {"conv1_filters": 3, "conv1_kernel": 5, "conv2_filters": 4, "conv2_kernel": 3},
        "spectral": {"blocks": 2, "channels": [3, 4]},
    },
    "hypergraph": {"k": 2, "theta_intra": 0.5, "theta_cross": 0.5},
    "train": {"lr": 0.005, "epochs": 2, "batch_size": 8, "seed": 0},
}


@pytest.fixture
def tiny_config() -> Callable[..., ExperimentConfig]:
    """Factory for a small, fast config; keyword sections are merged into the defaults."""

    def build(**sections: dict[str, Any]) -> ExperimentConfig:
        return ExperimentConfig.model_validate(_merge(TINY, sections))

    return build


@pytest.fixture
def tiny_split(tiny_config: Callable[..., ExperimentConfig]) -> DatasetSplit:
    """Featurised benchmark data: 4 classes, 6 training and 2 test segments each."""
    return build_dataset(tiny_config())
