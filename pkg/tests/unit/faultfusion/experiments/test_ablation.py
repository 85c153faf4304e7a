from collections.abc import Callable
from pathlib import Path

import pandas as pd

from faultfusion.experiments.ablation import ABLATION_ROWS, run_ablation, with_switches, write_ablation
from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import DatasetSplit


def test_rows_cover_single_streams_up_to_full_model() -> None:
    """Eight distinct combinations, the first three single-branch and the last the full model."""
    labels = [switches.label() for switches in ABLATION_ROWS]

    assert len(set(labels)) == 8
    assert labels[:3] == ["t", "s", "cr"]
    assert labels[-1] == "t+s+cr+cl+att"
    assert all(not switches.w_att for switches in ABLATION_ROWS[:-1])


def test_with_switches_leaves_the_rest_alone(tiny_config: Callable[..., ExperimentConfig]) -> None:
    """Only the switches change, so every row hashes differently."""
    config = tiny_config()

    row = with_switches(config, ABLATION_ROWS[0])

    assert row.train.switches == ABLATION_ROWS[0]
    assert row.train.lr == config.train.lr
    assert row.encoder == config.encoder
    assert config.train.switches.w_att
    hashes = {with_switches(config, switches).config_hash("train") for switches in ABLATION_ROWS}
    assert len(hashes) == 8


def test_sweep_writes_one_line_per_row(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit, tmp_path: Path
) -> None:
    """Every combination is trained on the shared split and lands in ablation.csv."""
    config = tiny_config(train={"epochs": 1})

    rows = run_ablation(config, tiny_split)
    name = write_ablation(tmp_path, rows)

    assert [row.switches for row in rows] == list(ABLATION_ROWS)
    assert all(row.report.samples == len(tiny_split.test) for row in rows)
    frame = pd.read_csv(tmp_path / name)
    assert list(frame.columns) == [
        "combination",
        "w_t",
        "w_s",
        "w_cr",
        "w_cl",
        "w_att",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "auc",
        "config_hash",
    ]
    assert len(frame) == 8
    assert frame["accuracy"].between(0, 1).all()
    assert frame["combination"].tolist() == [switches.label() for switches in ABLATION_ROWS]
