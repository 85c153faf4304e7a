from __future__ import annotations

import numpy as np

from faultfusion.errors import ContractError
from faultfusion.tensor.params import ParamStore


class Adam:
    """Adam optimiser; first and second moment buffers persist across steps."""

    def __init__(
        self,
        params: ParamStore,
        lr: float = 1e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self._params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self) -> None:
        """Apply one update to every parameter from its accumulated gradient."""
        missing = [name for name, tensor in self._params.items() if tensor.grad is None]
        if missing:
            msg = f"Adam step without gradients for {missing[:5]}{'...' if len(missing) > 5 else ''}"  # noqa: PLR2004
            raise ContractError(msg)

        self.steps += 1
        correction1 = 1 - self.beta1**self.steps
        correction2 = 1 - self.beta2**self.steps
        for name, tensor in self._params.items():
            grad = tensor.grad
            m = self._m.get(name)
            v = self._v.get(name)
            m = (1 - self.beta1) * grad if m is None else self.beta1 * m + (1 - self.beta1) * grad
            v = (1 - self.beta2) * grad * grad if v is None else self.beta2 * v + (1 - self.beta2) * grad * grad
            self._m[name] = m
            self._v[name] = v
            update = self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            tensor.data = (tensor.data - update).astype(tensor.dtype, copy=False)
