"""
Per-modality encoders mapping a batch to ``(B, D)`` embeddings.

The temporal stream runs raw segments through two conv/pool stages and an
LSTM; the spectral stream runs spectrogram images through a small residual
conv stack. Both register their weights in a shared :class:`ParamStore` under
their own prefix, which is also their checkpoint namespace.
"""

from abc import ABC, abstractmethod

import numpy as np

from faultfusion.errors import ConfigError, DimensionError
from faultfusion.schemas import SpectralConfig, TemporalConfig
from faultfusion.tensor import ParamStore, Tensor, ops

RELU_GAIN = float(np.sqrt(2.0))
FORGET_GATE_BIAS = 1.0


class Encoder(ABC):
    """A modality stream producing ``embed_dim`` features per sample."""

    prefix: str
    embed_dim: int

    @abstractmethod
    def encode(self, batch: np.ndarray) -> Tensor:
        """Embed a batch of raw inputs as a ``(B, embed_dim)`` tensor."""


class TemporalEncoder(Encoder):
    """Conv1D(64, 7) -> ReLU -> MaxPool -> Conv1D(128, 5) -> ReLU -> MaxPool -> LSTM(final hidden state)."""

    def __init__(
        self,
        params: ParamStore,
        config: TemporalConfig,
        embed_dim: int,
        segment_length: int,
        prefix: str = "enc.temporal",
    ) -> None:
        self.prefix = prefix
        self.embed_dim = embed_dim
        self.config = config
        self.segment_length = segment_length
        self.steps = config.output_length(segment_length)
        if self.steps < 1:
            msg = f"temporal conv/pool stages leave no frames for segments of {segment_length} samples"
            raise ConfigError(msg)

        c1, k1 = config.conv1_filters, config.conv1_kernel
        c2, k2 = config.conv2_filters, config.conv2_kernel
        self.conv1_w = params.fan_in_uniform(f"{prefix}.conv1.weight", (c1, 1, k1), k1, RELU_GAIN)
        self.conv1_b = params.zeros(f"{prefix}.conv1.bias", (c1,))
        self.conv2_w = params.fan_in_uniform(f"{prefix}.conv2.weight", (c2, c1, k2), c1 * k2, RELU_GAIN)
        self.conv2_b = params.zeros(f"{prefix}.conv2.bias", (c2,))

        hidden = embed_dim
        self.w_input = params.fan_in_uniform(f"{prefix}.lstm.w_input", (c2, 4 * hidden), c2)
        self.w_hidden = params.fan_in_uniform(f"{prefix}.lstm.w_hidden", (hidden, 4 * hidden), hidden)
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = FORGET_GATE_BIAS
        self.lstm_b = params.constant(f"{prefix}.lstm.bias", bias)

    def encode(self, batch: np.ndarray) -> Tensor:
        """Embed a ``(B, T)`` stack of normalised segments."""
        if batch.ndim != 2 or batch.shape[1] != self.segment_length:  # noqa: PLR2004
            msg = f"temporal encoder expects (B, {self.segment_length}) segments, got {batch.shape}"
            raise DimensionError(msg)
        cfg = self.config
        x = Tensor(batch[:, None, :])
        for weight, bias in ((self.conv1_w, self.conv1_b), (self.conv2_w, self.conv2_b)):
            x = ops.relu(ops.conv1d(x, weight, bias, cfg.stride))
            x = ops.max_pool1d(x, cfg.pool_size, cfg.pool_stride)
        return ops.lstm(ops.transpose(x, (0, 2, 1)), self.w_input, self.w_hidden, self.lstm_b)


class ResidualBlock:
    """``relu(conv_b(relu(conv_a(x))) + shortcut(x))``; the shortcut is a strided 1x1 conv when shapes change."""

    def __init__(self, params: ParamStore, prefix: str, in_channels: int, out_channels: int, stride: int) -> None:
        self.stride = stride
        self.conv_a_w = params.fan_in_uniform(
            f"{prefix}.conv_a.weight", (out_channels, in_channels, 3, 3), in_channels * 9, RELU_GAIN
        )
        self.conv_a_b = params.zeros(f"{prefix}.conv_a.bias", (out_channels,))
        self.conv_b_w = params.fan_in_uniform(
            f"{prefix}.conv_b.weight", (out_channels, out_channels, 3, 3), out_channels * 9, RELU_GAIN
        )
        self.conv_b_b = params.zeros(f"{prefix}.conv_b.bias", (out_channels,))
        self.projected = stride != 1 or in_channels != out_channels
        if self.projected:
            self.proj_w = params.fan_in_uniform(f"{prefix}.proj.weight", (out_channels, in_channels, 1, 1), in_channels)
            self.proj_b = params.zeros(f"{prefix}.proj.bias", (out_channels,))

    def residual(self, x: Tensor) -> Tensor:
        """The learned branch ``F(x)``."""
        h = ops.relu(ops.conv2d(x, self.conv_a_w, self.conv_a_b, self.stride, padding=1))
        return ops.conv2d(h, self.conv_b_w, self.conv_b_b, 1, padding=1)

    def shortcut(self, x: Tensor) -> Tensor:
        """Identity, or the projection when the block changes shape."""
        if not self.projected:
            return x
        return ops.conv2d(x, self.proj_w, self.proj_b, self.stride)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.relu(ops.add(self.residual(x), self.shortcut(x)))


class SpectralEncoder(Encoder):
    """Conv3x3 stem -> MaxPool -> residual blocks -> global average pool -> linear to D."""

    def __init__(
        self,
        params: ParamStore,
        config: SpectralConfig,
        embed_dim: int,
        image_shape: tuple[int, int],
        prefix: str = "enc.spectral",
    ) -> None:
        self.prefix = prefix
        self.embed_dim = embed_dim
        if min(image_shape) < 2:  # noqa: PLR2004
            msg = f"spectrogram images of {image_shape} are too small for the pooling stem"
            raise ConfigError(msg)
        self.image_shape = image_shape
        stem = config.channels[0]
        self.stem_w = params.fan_in_uniform(f"{prefix}.stem.weight", (stem, 1, 3, 3), 9, RELU_GAIN)
        self.stem_b = params.zeros(f"{prefix}.stem.bias", (stem,))

        self.blocks: list[ResidualBlock] = []
        in_channels = stem
        for index, out_channels in enumerate(config.channels):
            stride = 1 if index == 0 else 2
            self.blocks.append(ResidualBlock(params, f"{prefix}.block{index}", in_channels, out_channels, stride))
            in_channels = out_channels

        self.proj_w = params.fan_in_uniform(f"{prefix}.proj.weight", (in_channels, embed_dim), in_channels)
        self.proj_b = params.zeros(f"{prefix}.proj.bias", (embed_dim,))

    def encode(self, batch: np.ndarray) -> Tensor:
        """Embed a ``(B, H, W)`` stack of spectrogram images."""
        if batch.ndim != 3 or batch.shape[1:] != self.image_shape:  # noqa: PLR2004
            height, width = self.image_shape
            msg = f"spectral encoder expects (B, {height}, {width}) images, got {batch.shape}"
            raise DimensionError(msg)
        x = Tensor(batch[:, None, :, :])
        x = ops.max_pool2d(ops.relu(ops.conv2d(x, self.stem_w, self.stem_b, 1, padding=1)))
        for block in self.blocks:
            x = block(x)
        return ops.linear(ops.global_avg_pool2d(x), self.proj_w, self.proj_b)


def concat_cross(f_t: Tensor, f_s: Tensor) -> Tensor:
    """Cross-modality embedding ``[f_t || f_s]`` per sample."""
    if f_t.ndim != 2 or f_s.ndim != 2 or f_t.shape[0] != f_s.shape[0]:  # noqa: PLR2004
        msg = f"concat_cross: batch of f_t {f_t.shape} does not match f_s {f_s.shape}"
        raise DimensionError(msg)
    return ops.concat([f_t, f_s], axis=1)
