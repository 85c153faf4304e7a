"""
Parameter checkpoints.

A checkpoint is one JSON document::

    {"magic": "MMHCAN-CKPT-1", "metadata": {...}, "params": {"<name>": {"shape": [...], "values": [...]}}}

Values are stored row-major as JSON numbers; Python's float repr round-trips
exactly, so save-then-load reproduces every parameter bit for bit. Keys are
sorted so identical parameters always serialise to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from faultfusion.errors import CheckpointError
from faultfusion.tensor.params import ParamStore

CHECKPOINT_MAGIC = "MMHCAN-CKPT-1"


def dump_state(state: dict[str, np.ndarray], metadata: dict[str, Any] | None = None) -> str:
    """Serialise a name → array mapping to checkpoint JSON text."""
    params = {
        name: {"shape": list(values.shape), "values": values.reshape(-1).astype(np.float64).tolist()}
        for name, values in state.items()
    }
    document = {"magic": CHECKPOINT_MAGIC, "metadata": metadata or {}, "params": params}
    return json.dumps(document, sort_keys=True)


def save_checkpoint(path: Path, params: ParamStore, metadata: dict[str, Any] | None = None) -> None:
    """Write every parameter of ``params`` to ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_state(params.state(), metadata), encoding="utf-8")


def read_checkpoint(path: Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Return ``(state, metadata)`` from a checkpoint file."""
    if not path.is_file():
        msg = f"Checkpoint not found: {path}"
        raise CheckpointError(msg)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        msg = f"Checkpoint {path} is not valid JSON: {exc}"
        raise CheckpointError(msg) from exc
    if not isinstance(document, dict) or document.get("magic") != CHECKPOINT_MAGIC:
        msg = f"Checkpoint {path} does not start with the {CHECKPOINT_MAGIC} magic"
        raise CheckpointError(msg)

    state: dict[str, np.ndarray] = {}
    for name, entry in document.get("params", {}).items():
        shape = tuple(entry["shape"])
        values = np.asarray(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape, dtype=np.int64)):
            msg = f"Checkpoint {path}: parameter {name!r} holds {values.size} values for shape {shape}"
            raise CheckpointError(msg)
        state[name] = values.reshape(shape)
    return state, document.get("metadata", {})
