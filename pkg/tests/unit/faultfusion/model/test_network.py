from collections.abc import Callable
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from faultfusion.errors import CheckpointError, ContractError
from faultfusion.model.network import FusionNetwork, eval_batches
from faultfusion.schemas import ExperimentConfig
from faultfusion.signals.dataset import DatasetSplit
from faultfusion.tensor import Tape, Tensor, backward, ops, set_default_dtype
from faultfusion.tensor.gradcheck import directional_gradient_error, max_gradient_error
from faultfusion.training.losses import composite_loss


def _network(config: ExperimentConfig, split: DatasetSplit) -> FusionNetwork:
    return FusionNetwork(config, split.train.classes, split.train.signals.shape[1], (12, 12))


def test_eval_batches_never_leave_a_single_row() -> None:
    """A trailing batch of one joins the previous batch."""
    assert eval_batches(10, 4) == [slice(0, 4), slice(4, 8), slice(8, 10)]
    assert eval_batches(9, 4) == [slice(0, 4), slice(4, 9)]
    assert eval_batches(3, 2) == [slice(0, 3)]
    with pytest.raises(ContractError):
        eval_batches(1, 4)


def test_full_model_forward(tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit) -> None:
    """All three branches are built, refined and fused by four attention heads."""
    network = _network(tiny_config(), tiny_split)
    batch = tiny_split.train

    result = network.forward(batch.signals[:5], batch.images[:5])

    assert result.logits.shape == (5, 4)
    assert {m: r.shape for m, r in result.refined.items()} == {"t": (5, 6), "s": (5, 6), "c": (5, 12)}
    assert result.alpha is not None
    assert result.alpha.shape == (4, 5, 3)
    assert result.graphs["c"].node_count == 12
    assert "hgnn.c.proj.weight" in network.params
    assert network.params["hgnn.c.layer1.weight"].shape == (12, 12)


@pytest.mark.parametrize(
    ("switches", "present", "absent"),
    [
        (
            {"w_s": False, "w_cr": False},
            ["enc.temporal.conv1.weight", "hgnn.t.layer0.weight"],
            ["enc.spectral.", "hgnn.c."],
        ),
        (
            {"w_t": False, "w_s": False},
            ["enc.temporal.", "enc.spectral.", "hgnn.c.proj.weight"],
            ["hgnn.t.", "hgnn.s."],
        ),
        ({"w_att": False}, ["hgnn.c.layer0.weight"], ["fuse."]),
    ],
)
def test_switches_decide_the_parameter_namespace(
    tiny_config: Callable[..., ExperimentConfig],
    tiny_split: DatasetSplit,
    switches: dict[str, bool],
    present: list[str],
    absent: list[str],
) -> None:
    """Disabled blocks never register parameters; the cross branch pulls in both encoders."""
    network = _network(tiny_config(train={"switches": switches}), tiny_split)

    for prefix in present:
        assert network.params.names(prefix), prefix
    for prefix in absent:
        assert not network.params.names(prefix), prefix
    result = network.forward(tiny_split.test.signals, tiny_split.test.images)
    assert result.logits.shape == (len(tiny_split.test), 4)
    assert (result.alpha is None) == (switches.get("w_att") is False)


def test_full_model_gradient(tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit) -> None:
    """Cross entropy of the whole network matches finite differences in the graph-side weights."""
    set_default_dtype("float64")
    network = _network(tiny_config(train={"precision": "float64"}), tiny_split)
    signals, images, labels = tiny_split.train.signals[:4], tiny_split.train.images[:4], tiny_split.train.labels[:4]
    checked = [
        network.params["hgnn.t.layer0.weight"],
        network.params["hgnn.c.proj.weight"],
        network.params["fuse.head0.s.weight"],
        network.params["head.dense.weight"],
    ]

    def fn() -> Tensor:
        return ops.cross_entropy(network.forward(signals, images).logits, labels)

    assert max_gradient_error(fn, checked) < 1e-5


def test_checkpoint_round_trip(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit, tmp_path: Path
) -> None:
    """A reloaded network rebuilds the same architecture and predicts identically."""
    network = _network(tiny_config(), tiny_split)
    path = tmp_path / "checkpoint.json"
    network.save(path, {"epoch": 2, "val_acc": None})

    restored, metadata = FusionNetwork.from_checkpoint(path)

    assert metadata["epoch"] == 2
    assert restored.classes == network.classes
    assert restored.params.names() == network.params.names()
    test = tiny_split.test
    np.testing.assert_array_equal(
        restored.predict_logits(test.signals, test.images, 4), network.predict_logits(test.signals, test.images, 4)
    )


def test_checkpoint_for_another_architecture_is_rejected(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit, tmp_path: Path
) -> None:
    """Parameters that do not fit the recorded config are a checkpoint error."""
    network = _network(tiny_config(), tiny_split)
    path = tmp_path / "checkpoint.json"
    network.save(path)
    path.write_text(path.read_text().replace('"w_att": true', '"w_att": false'))

    with pytest.raises(CheckpointError, match="architecture"):
        FusionNetwork.from_checkpoint(path)


def test_prediction_mixes_class_sorted_rows(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Rows stored class by class are scored in seeded mixed batches and returned in input order."""
    network = _network(tiny_config(), tiny_split)
    seen: list[np.ndarray] = []

    def row_ids(signals: np.ndarray, _: np.ndarray | None) -> SimpleNamespace:
        seen.append(signals[:, 0].astype(int))
        return SimpleNamespace(logits=Tensor(np.repeat(signals[:, :1], 4, axis=1)))

    monkeypatch.setattr(network, "forward", row_ids)
    signals = np.repeat(np.arange(16, dtype=np.float64)[:, None], 3, axis=1)

    logits = network.predict_logits(signals, None, 4)

    np.testing.assert_array_equal(logits[:, 0], np.arange(16))
    assert [batch.size for batch in seen] == [4, 4, 4, 4]
    assert sorted(np.concatenate(seen).tolist()) == list(range(16))
    assert not all(np.array_equal(batch, np.arange(4 * i, 4 * i + 4)) for i, batch in enumerate(seen))

    first = list(seen)
    seen.clear()
    network.predict_logits(signals, None, 4)
    assert all(np.array_equal(a, b) for a, b in zip(first, seen, strict=True))


def _mixed_batch(split: DatasetSplit, size: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(len(split.train))[:size]


def test_every_parameter_receives_a_gradient(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit
) -> None:
    """After one backward pass of the composite loss no parameter tensor has an all-zero gradient."""
    set_default_dtype("float64")
    config = tiny_config(hgnn={"operator": "smoothing_I_minus_L"}, train={"precision": "float64"})
    network = _network(config, tiny_split)
    rows = _mixed_batch(tiny_split, 8, 0)
    batch = tiny_split.train.subset(rows)

    with Tape():
        result = network.forward(batch.signals, batch.images)
        loss = composite_loss(result, batch.labels, config.loss, config.train.switches, np.random.default_rng(0))
        backward(loss.total)

    dead = [name for name, tensor in network.params.items() if tensor.grad is None or not np.any(tensor.grad)]
    assert dead == []


def test_full_model_directional_gradients(
    tiny_config: Callable[..., ExperimentConfig], tiny_split: DatasetSplit
) -> None:
    """Cross entropy of the whole network, all parameters at once, over 100 random batches."""
    set_default_dtype("float64")
    network = _network(tiny_config(train={"precision": "float64"}), tiny_split)
    parameters = [tensor for _, tensor in network.params.items()]

    def error(seed: int) -> float:
        batch = tiny_split.train.subset(_mixed_batch(tiny_split, 4, seed))

        def fn() -> Tensor:
            return ops.cross_entropy(network.forward(batch.signals, batch.images).logits, batch.labels)

        return directional_gradient_error(fn, parameters, np.random.default_rng(seed), eps=1e-7)

    errors = [error(seed) for seed in range(100)]
    assert max(errors) < 1e-5, int(np.argmax(errors))
