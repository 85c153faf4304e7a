"""
Dense tensors recorded on an explicit tape for reverse-mode differentiation.

A :class:`Tape` is opened as a context manager; every op whose inputs require a
gradient appends one entry while it is active. :meth:`Tape.backward` walks the
entries in exact reverse recording order. Outside a tape ops still compute but
record nothing, which is how evaluation runs.

Tapes are thread-local: independent threads may each record on their own tape
without sharing state.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np

from faultfusion.errors import ContractError, DimensionError, NonFiniteError

ArrayLike: TypeAlias = np.ndarray | float | int | Sequence
BackwardFn: TypeAlias = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_SUPPORTED_DTYPES = {"float32": np.float32, "float64": np.float64}
_default_dtype: type[np.floating] = np.float32
_local = threading.local()


def set_default_dtype(precision: str) -> None:
    """Select the dtype every new tensor is created with (``float32`` or ``float64``)."""
    global _default_dtype  # noqa: PLW0603
    try:
        _default_dtype = _SUPPORTED_DTYPES[precision]
    except KeyError:
        msg = f"Unsupported precision {precision!r}; expected one of {sorted(_SUPPORTED_DTYPES)}"
        raise ContractError(msg) from None


def get_default_dtype() -> type[np.floating]:
    """Return the dtype new tensors are created with."""
    return _default_dtype


def _tape_stack() -> list[Tape]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def current_tape() -> Tape | None:
    """Return the innermost active tape on this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """An n-dimensional array with optional participation in gradient recording."""

    __array_priority__ = 1000  # make ``ndarray * Tensor`` defer to Tensor.__rmul__

    def __init__(
        self,
        data: ArrayLike,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: type[np.floating] | None = None,
    ) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=dtype or _default_dtype)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self.op = "leaf"
        self._tape: Tape | None = None

    # --- introspection ---

    @property
    def shape(self) -> tuple[int, ...]:
        """Extents of every axis."""
        return self.data.shape

    @property
    def ndim(self) -> int:
        """Number of axes."""
        return self.data.ndim

    @property
    def size(self) -> int:
        """Total number of elements."""
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        """Element type of the underlying buffer."""
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        """Return the underlying array. Callers must not mutate it."""
        return self.data

    def item(self) -> float:
        """Return the value of a single-element tensor as a Python float."""
        if self.data.size != 1:
            msg = f"item() needs a single-element tensor, got shape {self.shape}"
            raise ContractError(msg)
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None

    def detach(self) -> Tensor:
        """Return a tensor sharing the data but cut off from any tape."""
        return Tensor(self.data, dtype=self.data.dtype)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op!r}{label}, requires_grad={self.requires_grad})"

    # --- operator sugar; the rules live in faultfusion.tensor.ops ---

    def __add__(self, other: Tensor | float) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Tensor | float) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.sub(self, other)

    def __rsub__(self, other: Tensor | float) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.sub(other, self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Tensor | float) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.div(self, other)

    def __neg__(self) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.matmul(self, other)

    def sum(self, axis: int | None = None) -> Tensor:
        """Sum over ``axis`` (all axes when None)."""
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.sum_(self, axis)

    def mean(self, axis: int | None = None) -> Tensor:
        """Mean over ``axis`` (all axes when None)."""
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.mean(self, axis)

    def relu(self) -> Tensor:
        """Elementwise max(x, 0)."""
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.relu(self)

    @property
    def T(self) -> Tensor:  # noqa: N802
        """Transpose of a 2-D tensor."""
        from faultfusion.tensor import ops  # noqa: PLC0415

        return ops.transpose(self)


@dataclass(frozen=True)
class TapeEntry:
    """One recorded op: its inputs, its output and the rule mapping output grad to input grads."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Ordered record of differentiable ops, replayed in reverse by :meth:`backward`."""

    def __init__(self) -> None:
        self._entries: list[TapeEntry] = []

    def __enter__(self) -> Tape:
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[TapeEntry, ...]:
        """The recorded ops in recording order."""
        return tuple(self._entries)

    def record(self, op: str, output: Tensor, inputs: tuple[Tensor, ...], backward: BackwardFn) -> None:
        """Append an op; inputs always precede the output in the record."""
        output._tape = self  # noqa: SLF001
        self._entries.append(TapeEntry(op, inputs, output, backward))

    def backward(self, loss: Tensor) -> None:
        """
        Populate ``grad`` on every requires-grad tensor reachable from ``loss``.

        Gradients add to whatever a tensor already holds, so contributions from
        several uses (or several backward calls) accumulate.
        """
        if loss.data.size != 1:
            msg = f"backward() needs a scalar loss, got shape {loss.shape}"
            raise ContractError(msg)
        if not self._entries:
            msg = "backward() called on an empty tape"
            raise ContractError(msg)

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        touched: dict[int, Tensor] = {id(loss): loss}
        for entry in reversed(self._entries):
            out_grad = grads.get(id(entry.output))
            if out_grad is None:
                continue
            input_grads = entry.backward(out_grad)
            for tensor, grad in zip(entry.inputs, input_grads, strict=True):
                if grad is None or not tensor.requires_grad:
                    continue
                if grad.shape != tensor.shape:
                    msg = f"backward rule of {entry.op!r} returned grad {grad.shape} for input {tensor.shape}"
                    raise DimensionError(msg)
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad
                touched[key] = tensor

        for key, tensor in touched.items():
            grad = grads[key].astype(tensor.dtype, copy=False)
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad


def backward(loss: Tensor) -> None:
    """Back-propagate from a scalar loss on the tape that recorded it."""
    if loss.data.size != 1:
        msg = f"backward() needs a scalar loss, got shape {loss.shape}"
        raise ContractError(msg)
    tape = loss._tape  # noqa: SLF001
    if tape is None:
        msg = "loss was not recorded on a tape; run the forward pass inside `with Tape():`"
        raise ContractError(msg)
    tape.backward(loss)


def as_tensor(value: Tensor | ArrayLike) -> Tensor:
    """Wrap plain numbers and arrays as constant tensors; pass tensors through."""
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    """
    Build an op's output tensor and record it on the active tape when needed.

    Every op funnels through here, so the finiteness invariant is checked once:
    a NaN or Inf out of finite inputs raises :class:`NonFiniteError` naming the op.
    """
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(op)
    requires_grad = any(tensor.requires_grad for tensor in inputs)
    out = Tensor(data, requires_grad=requires_grad, dtype=data.dtype if data.dtype.kind == "f" else None)
    out.op = op
    tape = current_tape()
    if requires_grad and tape is not None:
        tape.record(op, out, inputs, backward_fn)
    return out
