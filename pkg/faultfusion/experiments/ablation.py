"""
The architecture ablation sweep.

Eight switch combinations are trained and evaluated on one shared data split,
from single streams up to the full model with attention.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from faultfusion.model.network import FusionNetwork
from faultfusion.schemas import AblationSwitches, ExperimentConfig, MetricsReport
from faultfusion.signals.dataset import DatasetSplit, build_dataset
from faultfusion.training.metrics import evaluate
from faultfusion.training.trainer import Trainer

logger = logging.getLogger("faultfusion")

ABLATION_FILE = "ablation.csv"
METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1", "auc")

ABLATION_ROWS: tuple[AblationSwitches, ...] = (
    AblationSwitches(w_t=True, w_s=False, w_cr=False, w_cl=False, w_att=False),
    AblationSwitches(w_t=False, w_s=True, w_cr=False, w_cl=False, w_att=False),
    AblationSwitches(w_t=False, w_s=False, w_cr=True, w_cl=False, w_att=False),
    AblationSwitches(w_t=True, w_s=True, w_cr=False, w_cl=False, w_att=False),
    AblationSwitches(w_t=True, w_s=True, w_cr=False, w_cl=True, w_att=False),
    AblationSwitches(w_t=True, w_s=True, w_cr=True, w_cl=False, w_att=False),
    AblationSwitches(w_t=True, w_s=True, w_cr=True, w_cl=True, w_att=False),
    AblationSwitches(w_t=True, w_s=True, w_cr=True, w_cl=True, w_att=True),
)


@dataclass(frozen=True)
class AblationRow:
    """One trained combination."""

    switches: AblationSwitches
    config_hash: str
    report: MetricsReport


def with_switches(config: ExperimentConfig, switches: AblationSwitches) -> ExperimentConfig:
    """A copy of ``config`` training with ``switches``."""
    return config.model_copy(update={"train": config.train.model_copy(update={"switches": switches})})


def run_ablation(config: ExperimentConfig, split: DatasetSplit | None = None) -> list[AblationRow]:
    """Train and evaluate every row on the same split and seed."""
    split = split or build_dataset(config)
    segment_length = split.train.signals.shape[1]
    image_shape = (config.stft.image_height, config.stft.image_width)
    rows = []
    for switches in ABLATION_ROWS:
        row_config = with_switches(config, switches)
        logger.info("Ablation row %s", switches.label())
        network = FusionNetwork(row_config, split.train.classes, segment_length, image_shape)
        Trainer(network).fit(split)
        report = evaluate(network, split.test, row_config.train.batch_size)
        rows.append(AblationRow(switches, row_config.config_hash("train"), report))
    return rows


def ablation_frame(rows: list[AblationRow]) -> pd.DataFrame:
    """One line per row: the switches, the five metrics and the row's config hash."""
    records = []
    for row in rows:
        record = {"combination": row.switches.label(), **row.switches.model_dump()}
        record.update({column: getattr(row.report, column) for column in METRIC_COLUMNS})
        record["config_hash"] = row.config_hash
        records.append(record)
    return pd.DataFrame.from_records(records)


def write_ablation(directory: Path, rows: list[AblationRow]) -> str:
    """Write ``ablation.csv`` and return its file name."""
    ablation_frame(rows).to_csv(directory / ABLATION_FILE, index=False, float_format="%.6f")
    return ABLATION_FILE
