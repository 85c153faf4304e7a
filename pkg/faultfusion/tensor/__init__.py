"""Dense tensors with tape-based reverse-mode differentiation, built on numpy."""

from faultfusion.tensor import ops
from faultfusion.tensor.checkpoint import CHECKPOINT_MAGIC, read_checkpoint, save_checkpoint
from faultfusion.tensor.optim import Adam
from faultfusion.tensor.params import ParamStore
from faultfusion.tensor.tensor import (
    Tape,
    Tensor,
    as_tensor,
    backward,
    current_tape,
    get_default_dtype,
    set_default_dtype,
)

__all__ = [
    "CHECKPOINT_MAGIC",
    "Adam",
    "ParamStore",
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "current_tape",
    "get_default_dtype",
    "ops",
    "read_checkpoint",
    "save_checkpoint",
    "set_default_dtype",
]
