"""Central finite-difference checks for the backward rules."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from faultfusion.tensor.tensor import Tape, Tensor, backward


def numerical_grad(fn: Callable[[], Tensor], tensor: Tensor, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the scalar ``fn()`` with respect to ``tensor``."""
    grad = np.zeros(tensor.shape, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + eps
        plus = fn().item()
        flat[index] = original - eps
        minus = fn().item()
        flat[index] = original
        grad.reshape(-1)[index] = (plus - minus) / (2 * eps)
    return grad


def analytic_grads(fn: Callable[[], Tensor], tensors: Sequence[Tensor]) -> list[np.ndarray]:
    """Reverse-mode gradients of the scalar ``fn()`` with respect to each of ``tensors``."""
    for tensor in tensors:
        tensor.requires_grad = True
        tensor.zero_grad()
    with Tape():
        loss = fn()
        backward(loss)
    return [np.zeros(t.shape) if t.grad is None else t.grad.astype(np.float64) for t in tensors]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Norm-wise ``||a - n|| / max(||a||, ||n||, floor)`` over a whole gradient tensor."""
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), floor)
    return float(np.linalg.norm(analytic - numeric)) / scale


def max_gradient_error(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    eps: float = 1e-6,
    floor: float = 1e-6,
) -> float:
    """
    Worst relative error between reverse-mode and finite-difference gradients.

    ``fn`` must rebuild its output from the current contents of ``tensors`` on
    every call; the perturbation is applied in place to their buffers. Use
    float64 tensors: at float32 the finite differences themselves are too noisy.
    """
    analytic = analytic_grads(fn, tensors)
    worst = 0.0
    for tensor, grad in zip(tensors, analytic, strict=True):
        numeric = numerical_grad(fn, tensor, eps)
        worst = max(worst, relative_error(grad, numeric, floor))
    return worst


def directional_gradient_error(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    rng: np.random.Generator,
    eps: float = 1e-6,
    floor: float = 1e-8,
) -> float:
    """
    Gradient check along one random unit direction through all of ``tensors`` at once.

    Compares ``g · v`` with a central difference of ``fn`` along ``v`` and scales
    the gap by ``||g||``, which bounds ``|g · v|``. Two extra forward passes per
    call, so whole networks can be checked many times over.
    """
    analytic = analytic_grads(fn, tensors)
    directions = [rng.standard_normal(tensor.shape) for tensor in tensors]
    norm = float(np.sqrt(sum(float(np.sum(d * d)) for d in directions)))
    directions = [d / norm for d in directions]
    projected = sum(float(np.sum(g * d)) for g, d in zip(analytic, directions, strict=True))

    originals = [tensor.data.copy() for tensor in tensors]
    try:
        for tensor, original, direction in zip(tensors, originals, directions, strict=True):
            tensor.data[...] = original + eps * direction
        plus = fn().item()
        for tensor, original, direction in zip(tensors, originals, directions, strict=True):
            tensor.data[...] = original - eps * direction
        minus = fn().item()
    finally:
        for tensor, original in zip(tensors, originals, strict=True):
            tensor.data[...] = original
    numeric = (plus - minus) / (2 * eps)
    scale = max(float(np.sqrt(sum(float(np.sum(g * g)) for g in analytic))), floor)
    return abs(projected - numeric) / scale
