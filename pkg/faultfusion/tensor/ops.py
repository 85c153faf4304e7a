"""
Differentiable operations.

Broadcasting is deliberately narrow: binary elementwise ops accept two tensors of
equal shape, or a tensor and a scalar (a Python number or a single-element
tensor). Anything wider is spelled out with an explicit op (``linear`` adds a
bias row, ``scale_rows`` weights rows), which keeps every backward rule easy
to audit.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from faultfusion.errors import ContractError, DimensionError, DomainError
from faultfusion.tensor.tensor import Tensor, as_tensor, make_result


def _is_scalar(tensor: Tensor) -> bool:
    return tensor.data.size == 1 and tensor.ndim <= 1


def _reduce_to(grad: np.ndarray, tensor: Tensor) -> np.ndarray:
    """Sum a full-shape gradient down to the shape of a scalar operand."""
    if grad.shape == tensor.shape:
        return grad
    return np.asarray(grad.sum()).reshape(tensor.shape)


def _check_binary(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    if a.shape == b.shape:
        return a.shape
    if _is_scalar(b):
        return a.shape
    if _is_scalar(a):
        return b.shape
    msg = f"{op}: cannot combine shapes {a.shape} and {b.shape}; only equal shapes or a scalar operand are supported"
    raise DimensionError(msg)


def add(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise sum."""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("add", a, b)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad, a), _reduce_to(grad, b)

    return make_result("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise difference."""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("sub", a, b)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad, a), _reduce_to(-grad, b)

    return make_result("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise product."""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("mul", a, b)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad * b.data, a), _reduce_to(grad * a.data, b)

    return make_result("mul", a.data * b.data, (a, b), backward)


def div(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise quotient."""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("div", a, b)
    if np.any(b.data == 0):
        msg = "div: division by zero"
        raise DomainError(msg)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad / b.data, a), _reduce_to(-grad * a.data / (b.data * b.data), b)

    return make_result("div", a.data / b.data, (a, b), backward)


def neg(x: Tensor) -> Tensor:
    """Elementwise negation."""
    return make_result("neg", -x.data, (x,), lambda grad: (-grad,))


def relu(x: Tensor) -> Tensor:
    """Elementwise max(x, 0); the subgradient at exactly 0 is 0."""
    mask = x.data > 0
    return make_result("relu", np.where(mask, x.data, 0).astype(x.dtype), (x,), lambda grad: (grad * mask,))


def exp(x: Tensor) -> Tensor:
    """Elementwise e**x."""
    out = np.exp(x.data)
    return make_result("exp", out, (x,), lambda grad: (grad * out,))


def log1p(x: Tensor) -> Tensor:
    """Elementwise log(1 + x)."""
    if np.any(x.data <= -1):
        msg = "log1p: input must be greater than -1"
        raise DomainError(msg)
    return make_result("log1p", np.log1p(x.data), (x,), lambda grad: (grad / (1 + x.data),))


def sqrt(x: Tensor) -> Tensor:
    """Elementwise square root of a positive tensor."""
    if np.any(x.data <= 0):
        msg = "sqrt: entries must be positive (add an epsilon before taking distances)"
        raise DomainError(msg)
    out = np.sqrt(x.data)
    return make_result("sqrt", out, (x,), lambda grad: (grad * 0.5 / out,))


def sqrt_recip(x: Tensor) -> Tensor:
    """Elementwise 1/sqrt(x); zero degrees must be masked by the caller."""
    if np.any(x.data <= 0):
        msg = "sqrt_recip: entries must be positive"
        raise DomainError(msg)
    out = 1.0 / np.sqrt(x.data)
    return make_result("sqrt_recip", out, (x,), lambda grad: (grad * -0.5 * out / x.data,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Product of two 2-D tensors."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:  # noqa: PLR2004
        msg = f"matmul: shapes {a.shape} and {b.shape} are not aligned"
        raise DimensionError(msg)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return grad @ b.data.T, a.data.T @ grad

    return make_result("matmul", a.data @ b.data, (a, b), backward)


def sum_(x: Tensor, axis: int | None = None) -> Tensor:
    """Sum over one axis, or over everything when ``axis`` is None."""

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        expanded = grad if axis is None else np.expand_dims(grad, axis)
        return (np.broadcast_to(expanded, x.shape).copy(),)

    return make_result("sum", np.asarray(x.data.sum(axis=axis)), (x,), backward)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    """Mean over one axis, or over everything when ``axis`` is None."""
    count = x.data.size if axis is None else x.shape[axis]

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        expanded = grad if axis is None else np.expand_dims(grad, axis)
        return (np.broadcast_to(expanded / count, x.shape).copy(),)

    return make_result("mean", np.asarray(x.data.mean(axis=axis)), (x,), backward)


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    """Permute axes (reverse them when ``axes`` is None)."""
    perm = tuple(axes) if axes is not None else tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(perm))
    return make_result("transpose", np.transpose(x.data, perm), (x,), lambda grad: (np.transpose(grad, inverse),))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    """View the same elements under a new shape."""
    return make_result("reshape", x.data.reshape(shape), (x,), lambda grad: (grad.reshape(x.shape),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Join tensors along ``axis``; the backward pass splits the gradient back exactly."""
    if not tensors:
        msg = "concat: need at least one tensor"
        raise ContractError(msg)
    reference = tensors[0].shape
    norm_axis = axis % len(reference)
    for tensor in tensors[1:]:
        other = tensor.shape
        if len(other) != len(reference) or any(
            extent != ref for i, (extent, ref) in enumerate(zip(other, reference, strict=True)) if i != norm_axis
        ):
            msg = f"concat: shapes {reference} and {other} differ off axis {norm_axis}"
            raise DimensionError(msg)
    splits = np.cumsum([tensor.shape[norm_axis] for tensor in tensors])[:-1]

    def backward(grad: np.ndarray) -> list[np.ndarray]:
        return [part.copy() for part in np.split(grad, splits, axis=norm_axis)]

    data = np.concatenate([tensor.data for tensor in tensors], axis=norm_axis)
    return make_result("concat", data, tuple(tensors), backward)


def slice_columns(x: Tensor, start: int, stop: int) -> Tensor:
    """Columns ``start:stop`` of a 2-D tensor."""

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(x.data)
        full[:, start:stop] = grad
        return (full,)

    return make_result("slice_columns", x.data[:, start:stop].copy(), (x,), backward)


def gather_rows(x: Tensor, indices: Sequence[int] | np.ndarray) -> Tensor:
    """Rows of a 2-D tensor picked by index (repeats allowed; their grads add up)."""
    idx = np.asarray(indices, dtype=np.intp)

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(x.data)
        np.add.at(full, idx, grad)
        return (full,)

    return make_result("gather_rows", x.data[idx], (x,), backward)


def scale_rows(x: Tensor, weights: Tensor) -> Tensor:
    """Multiply row ``i`` of a (B, D) tensor by ``weights[i]`` of a (B,) tensor."""
    if x.ndim != 2 or weights.shape != (x.shape[0],):  # noqa: PLR2004
        msg = f"scale_rows: weights {weights.shape} do not match rows of {x.shape}"
        raise DimensionError(msg)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return grad * weights.data[:, None], (grad * x.data).sum(axis=1)

    return make_result("scale_rows", x.data * weights.data[:, None], (x, weights), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map ``x @ weight + bias`` on a (B, in) tensor with weight (in, out) and bias (out,)."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:  # noqa: PLR2004
        msg = f"linear: input {x.shape} does not match weight {weight.shape}"
        raise DimensionError(msg)
    if bias is not None and bias.shape != (weight.shape[1],):
        msg = f"linear: bias {bias.shape} does not match weight {weight.shape}"
        raise DimensionError(msg)
    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data

    def backward(grad: np.ndarray) -> list[np.ndarray]:
        grads = [grad @ weight.data.T, x.data.T @ grad]
        if bias is not None:
            grads.append(grad.sum(axis=0))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return make_result("linear", out, inputs, backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Softmax along ``axis``, stabilised by subtracting the maximum."""
    if x.shape[axis] == 0:
        msg = "softmax: axis is empty"
        raise ContractError(msg)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        return (out * (grad - (grad * out).sum(axis=axis, keepdims=True)),)

    return make_result("softmax", out, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Log of softmax along ``axis``, computed without forming the softmax first."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad - np.exp(out) * grad.sum(axis=axis, keepdims=True),)

    return make_result("log_softmax", out, (x,), backward)


def cross_entropy(logits: Tensor, labels: Sequence[int] | np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(``logits``)."""
    target = np.asarray(labels, dtype=np.intp)
    if logits.ndim != 2 or target.shape != (logits.shape[0],):  # noqa: PLR2004
        msg = f"cross_entropy: logits {logits.shape} do not match labels {target.shape}"
        raise DimensionError(msg)
    if target.size and (target.min() < 0 or target.max() >= logits.shape[1]):
        msg = f"cross_entropy: labels must lie in [0, {logits.shape[1]})"
        raise ContractError(msg)
    batch = logits.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(batch), target].mean()

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        probs = np.exp(log_probs)
        probs[np.arange(batch), target] -= 1
        return (probs * (grad / batch),)

    return make_result("cross_entropy", np.asarray(loss, dtype=logits.dtype), (logits,), backward)


def conv1d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """
    Valid (unpadded) 1-D cross-correlation.

    ``x`` is (B, C, L), ``weight`` is (C', C, k) and ``bias`` is (C',); the output
    is (B, C', (L - k) // stride + 1).
    """
    batch, channels, length = x.shape
    out_channels, in_channels, kernel = weight.shape
    if in_channels != channels:
        msg = f"conv1d: input {x.shape} has {channels} channels but weight {weight.shape} expects {in_channels}"
        raise DimensionError(msg)
    if kernel > length:
        msg = f"conv1d: kernel {kernel} is longer than the input length {length} (input {x.shape})"
        raise DimensionError(msg)
    windows = sliding_window_view(x.data, kernel, axis=2)[:, :, ::stride]  # (B, C, L', k)
    out_len = windows.shape[2]
    out = np.tensordot(windows, weight.data, axes=([1, 3], [1, 2])).transpose(0, 2, 1) + bias.data[None, :, None]

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        grad_w = np.tensordot(grad, windows, axes=([0, 2], [0, 2]))
        grad_b = grad.sum(axis=(0, 2))
        grad_x = np.zeros_like(x.data)
        span = stride * (out_len - 1) + 1
        for k in range(kernel):
            grad_x[:, :, k : k + span : stride] += np.tensordot(weight.data[:, :, k], grad, axes=([0], [1])).transpose(
                1, 0, 2
            )
        return grad_x, grad_w, grad_b

    return make_result("conv1d", np.ascontiguousarray(out), (x, weight, bias), backward)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of (B, C, H, W) with (C', C, kh, kw) weights and zero padding."""
    _, channels, height, width = x.shape
    out_channels, in_channels, kh, kw = weight.shape
    if in_channels != channels:
        msg = f"conv2d: input {x.shape} has {channels} channels but weight {weight.shape} expects {in_channels}"
        raise DimensionError(msg)
    if kh > height + 2 * padding or kw > width + 2 * padding:
        msg = f"conv2d: kernel {(kh, kw)} does not fit input {x.shape} with padding {padding}"
        raise DimensionError(msg)
    pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
    padded = np.pad(x.data, pad) if padding else x.data
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]  # (B, C, H', W', kh, kw)
    out_h, out_w = windows.shape[2], windows.shape[3]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    out = out + bias.data[None, :, None, None]

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        grad_w = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_padded = np.zeros_like(padded)
        span_h = stride * (out_h - 1) + 1
        span_w = stride * (out_w - 1) + 1
        for i in range(kh):
            for j in range(kw):
                contribution = np.tensordot(weight.data[:, :, i, j], grad, axes=([0], [1])).transpose(1, 0, 2, 3)
                grad_padded[:, :, i : i + span_h : stride, j : j + span_w : stride] += contribution
        grad_x = grad_padded[:, :, padding : padding + height, padding : padding + width] if padding else grad_padded
        return np.ascontiguousarray(grad_x), grad_w, grad_b

    return make_result("conv2d", np.ascontiguousarray(out), (x, weight, bias), backward)


def max_pool1d(x: Tensor, size: int = 2, stride: int = 2) -> Tensor:
    """Max pooling over the last axis of a (B, C, L) tensor; ties route the grad to the first maximum."""
    if size > x.shape[2]:
        msg = f"max_pool1d: pool size {size} exceeds input length of {x.shape}"
        raise DimensionError(msg)
    windows = sliding_window_view(x.data, size, axis=2)[:, :, ::stride]
    arg = windows.argmax(axis=3)
    out = windows.max(axis=3)
    out_len = out.shape[2]

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        grad_x = np.zeros_like(x.data)
        span = stride * (out_len - 1) + 1
        for k in range(size):
            grad_x[:, :, k : k + span : stride] += grad * (arg == k)
        return (grad_x,)

    return make_result("max_pool1d", np.ascontiguousarray(out), (x,), backward)


def max_pool2d(x: Tensor, size: int = 2, stride: int = 2) -> Tensor:
    """Max pooling over the two trailing axes of a (B, C, H, W) tensor."""
    if size > x.shape[2] or size > x.shape[3]:
        msg = f"max_pool2d: pool size {size} exceeds spatial dims of {x.shape}"
        raise DimensionError(msg)
    windows = sliding_window_view(x.data, (size, size), axis=(2, 3))[:, :, ::stride, ::stride]
    flat = windows.reshape(*windows.shape[:4], size * size)
    arg = flat.argmax(axis=4)
    out = flat.max(axis=4)
    out_h, out_w = out.shape[2], out.shape[3]

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        grad_x = np.zeros_like(x.data)
        span_h = stride * (out_h - 1) + 1
        span_w = stride * (out_w - 1) + 1
        for i in range(size):
            for j in range(size):
                grad_x[:, :, i : i + span_h : stride, j : j + span_w : stride] += grad * (arg == i * size + j)
        return (grad_x,)

    return make_result("max_pool2d", np.ascontiguousarray(out), (x,), backward)


def global_avg_pool2d(x: Tensor) -> Tensor:
    """Average a (B, C, H, W) tensor over its spatial axes, giving (B, C)."""
    area = x.shape[2] * x.shape[3]

    def backward(grad: np.ndarray) -> tuple[np.ndarray]:
        return (np.broadcast_to(grad[:, :, None, None] / area, x.shape).copy(),)

    return make_result("global_avg_pool2d", x.data.mean(axis=(2, 3)), (x,), backward)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def lstm(x: Tensor, w_input: Tensor, w_hidden: Tensor, bias: Tensor) -> Tensor:
    """
    Single-layer LSTM over a (B, T, F) sequence, returning the final hidden state (B, H).

    Gate blocks in the 4H axis are ordered input, forget, cell, output. The whole
    unrolled recurrence is one tape entry with a hand-written backward pass through
    time, which keeps the tape short for long sequences.
    """
    batch, steps, features = x.shape
    hidden = w_hidden.shape[0]
    if w_input.shape != (features, 4 * hidden) or w_hidden.shape != (hidden, 4 * hidden) or bias.shape != (4 * hidden,):
        msg = (
            f"lstm: input {x.shape} with weights {w_input.shape}, {w_hidden.shape} and bias {bias.shape} "
            f"do not describe a cell with hidden size {hidden}"
        )
        raise DimensionError(msg)

    projected = np.tensordot(x.data, w_input.data, axes=([2], [0])) + bias.data  # (B, T, 4H)
    dtype = x.dtype
    h = np.zeros((batch, hidden), dtype=dtype)
    c = np.zeros((batch, hidden), dtype=dtype)
    hs, cs, gates = [h], [c], []
    for t in range(steps):
        z = projected[:, t] + h @ w_hidden.data
        i = _sigmoid(z[:, :hidden])
        f = _sigmoid(z[:, hidden : 2 * hidden])
        g = np.tanh(z[:, 2 * hidden : 3 * hidden])
        o = _sigmoid(z[:, 3 * hidden :])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates.append((i, f, g, o))
        hs.append(h)
        cs.append(c)

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        grad_z = np.zeros_like(projected)
        grad_wh = np.zeros_like(w_hidden.data)
        dh = grad
        dc = np.zeros_like(c)
        for t in reversed(range(steps)):
            i, f, g, o = gates[t]
            tanh_c = np.tanh(cs[t + 1])
            do = dh * tanh_c
            dc = dc + dh * o * (1 - tanh_c * tanh_c)
            di = dc * g
            dg = dc * i
            df = dc * cs[t]
            dz = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)],
                axis=1,
            )
            grad_z[:, t] = dz
            grad_wh += hs[t].T @ dz
            dh = dz @ w_hidden.data.T
            dc = dc * f
        grad_x = np.tensordot(grad_z, w_input.data, axes=([2], [1]))
        grad_wi = np.tensordot(x.data, grad_z, axes=([0, 1], [0, 1]))
        grad_b = grad_z.sum(axis=(0, 1))
        return grad_x, grad_wi, grad_wh, grad_b

    return make_result("lstm", h, (x, w_input, w_hidden, bias), backward)
