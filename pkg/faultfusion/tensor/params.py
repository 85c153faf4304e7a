"""Named registry of learnable tensors plus the initialisation schemes used to fill it."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from faultfusion.errors import ContractError
from faultfusion.tensor.tensor import Tensor, get_default_dtype


class ParamStore:
    """
    Ordered mapping from dotted parameter names to requires-grad tensors.

    Names double as the checkpoint namespace (``enc.temporal.conv1.weight``,
    ``hgnn.t.layer0.weight``, ...), so an ablated block simply never registers
    its names.
    """

    def __init__(self, rng: np.random.Generator) -> None:
        self._rng = rng
        self._params: dict[str, Tensor] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        """Iterate ``(name, tensor)`` pairs in registration order."""
        return iter(self._params.items())

    def names(self, prefix: str = "") -> list[str]:
        """Return registered names, optionally only those under ``prefix``."""
        return [name for name in self._params if name.startswith(prefix)]

    def register(self, name: str, data: np.ndarray) -> Tensor:
        """Add a parameter; names are unique."""
        if name in self._params:
            msg = f"Parameter {name!r} registered twice"
            raise ContractError(msg)
        tensor = Tensor(data, requires_grad=True, name=name, dtype=get_default_dtype())
        self._params[name] = tensor
        return tensor

    def fan_in_uniform(self, name: str, shape: tuple[int, ...], fan_in: int, gain: float = 1.0) -> Tensor:
        """Register a tensor drawn from U(-b, b) with ``b = gain * sqrt(3 / fan_in)``."""
        bound = gain * np.sqrt(3.0 / fan_in)
        return self.register(name, self._rng.uniform(-bound, bound, size=shape))

    def zeros(self, name: str, shape: tuple[int, ...]) -> Tensor:
        """Register an all-zero tensor."""
        return self.register(name, np.zeros(shape))

    def constant(self, name: str, data: np.ndarray) -> Tensor:
        """Register a tensor with explicit initial values."""
        return self.register(name, np.asarray(data))

    def zero_grad(self) -> None:
        """Drop every accumulated gradient."""
        for tensor in self._params.values():
            tensor.zero_grad()

    def state(self) -> dict[str, np.ndarray]:
        """Return copies of all parameter values, keyed by name."""
        return {name: tensor.data.copy() for name, tensor in self._params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values from ``state``; names and shapes must match exactly."""
        missing = sorted(set(self._params) - set(state))
        unexpected = sorted(set(state) - set(self._params))
        if missing or unexpected:
            msg = f"Parameter names do not match: missing {missing}, unexpected {unexpected}"
            raise ContractError(msg)
        for name, tensor in self._params.items():
            values = np.asarray(state[name], dtype=tensor.dtype)
            if values.shape != tensor.shape:
                msg = f"Parameter {name!r} has shape {tensor.shape} but the state holds {values.shape}"
                raise ContractError(msg)
            tensor.data = values.copy()
