"""
Short-time Fourier transform and the spectrogram images fed to the spectral encoder.

A segment goes through: framing and windowing, one-sided DFT per frame,
magnitude, optional crop to ``band_limit_hz``, ``log1p``, bilinear resize to the
target image size and finally min-max scaling to [0, 1].
"""

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import zoom
from scipy.signal import get_window

from faultfusion.errors import ConfigError, ContractError, DataError
from faultfusion.schemas import WindowKind, WindowSpec
from faultfusion.signals.base import SignalSegment

logger = logging.getLogger("faultfusion")

CACHE_MAGIC = "FFSPEC1"

_SCIPY_WINDOW_NAMES = {WindowKind.HANN: "hann", WindowKind.BLACKMAN_HARRIS: "blackmanharris"}


@dataclass(frozen=True)
class Regime:
    """
    A named acquisition setup: sample rate, segment length and STFT framing.

    ``hop`` follows the convention that a quoted overlap counts overlapping
    samples, so 75% overlap on a 2000-sample window means a hop of 500.
    """

    name: str
    sample_rate_hz: float
    segment_length: int
    window: WindowSpec

    @property
    def freq_resolution_hz(self) -> float:
        """Bin spacing of the one-sided spectrum."""
        return self.sample_rate_hz / self.window.fft_size

    @property
    def time_step_s(self) -> float:
        """Time between consecutive frames."""
        return self.window.hop / self.sample_rate_hz

    @property
    def frame_count(self) -> int:
        """Frames produced for one segment."""
        return (self.segment_length - self.window.length) // self.window.hop + 1

    def with_overrides(
        self,
        *,
        sample_rate_hz: float | None = None,
        segment_length: int | None = None,
        window: WindowSpec | None = None,
    ) -> "Regime":
        """Return a copy with any given field replaced, re-checking that a segment still fits one window."""
        regime = dataclasses.replace(
            self,
            sample_rate_hz=sample_rate_hz or self.sample_rate_hz,
            segment_length=segment_length or self.segment_length,
            window=window or self.window,
        )
        if regime.segment_length < regime.window.length:
            msg = (
                f"segment length {regime.segment_length} is shorter than the "
                f"{regime.window.length}-sample window of regime {regime.name!r}"
            )
            raise ConfigError(msg)
        return regime


REGIMES: dict[str, Regime] = {
    "rotor": Regime(
        "rotor",
        10_000.0,
        2000,
        WindowSpec(kind=WindowKind.HANN, length=2000, hop=500, fft_size=2048, band_limit_hz=200.0),
    ),
    "bearing": Regime(
        "bearing",
        51_200.0,
        2048,
        WindowSpec(kind=WindowKind.BLACKMAN_HARRIS, length=256, hop=64, fft_size=512, band_limit_hz=10_000.0),
    ),
    # 70% overlap on 512 samples: 358 overlapping, hop 154.
    "stator-vib": Regime(
        "stator-vib",
        25_600.0,
        2560,
        WindowSpec(kind=WindowKind.HANN, length=512, hop=154, fft_size=1024, band_limit_hz=2500.0),
    ),
    # Overlap unstated for this channel; 75% assumed.
    "stator-cur": Regime(
        "stator-cur",
        100_000.0,
        10_000,
        WindowSpec(kind=WindowKind.HANN, length=5000, hop=1250, fft_size=8192, band_limit_hz=1000.0),
    ),
    "desk": Regime(
        "desk",
        2000.0,
        512,
        WindowSpec(kind=WindowKind.HANN, length=128, hop=32, fft_size=256),
    ),
}


def get_regime(name: str) -> Regime:
    """Look up a regime preset by name."""
    try:
        return REGIMES[name]
    except KeyError:
        msg = f"Unknown regime {name!r}; expected one of {sorted(REGIMES)}"
        raise ConfigError(msg) from None


@dataclass(frozen=True)
class Spectrogram:
    """A min-max scaled image, rows are frames and columns are frequency bins."""

    values: np.ndarray
    freq_resolution_hz: float
    time_step_s: float
    source_label: str


def window_values(window: WindowSpec) -> np.ndarray:
    """The periodic analysis window of ``window.length`` samples."""
    return get_window(_SCIPY_WINDOW_NAMES[window.kind], window.length, fftbins=True)


def stft(segment: SignalSegment | np.ndarray, window: WindowSpec) -> np.ndarray:
    """
    Complex one-sided STFT as a ``frames × (fft_size / 2 + 1)`` matrix.

    Frame ``k`` is the ``fft_size``-point DFT of samples ``[k*hop, k*hop + length)``
    times the window, zero-padded.
    """
    values = segment.values if isinstance(segment, SignalSegment) else np.asarray(segment, dtype=np.float64)
    if values.ndim != 1:
        msg = f"stft expects a 1-D segment, got shape {values.shape}"
        raise ContractError(msg)
    if values.size < window.length:
        msg = f"segment of {values.size} samples is shorter than the {window.length}-sample window"
        raise ContractError(msg)
    frames = np.lib.stride_tricks.sliding_window_view(values, window.length)[:: window.hop]
    return np.fft.rfft(frames * window_values(window), n=window.fft_size, axis=1)


def crop_band(magnitude: np.ndarray, window: WindowSpec, sample_rate_hz: float) -> np.ndarray:
    """Keep the bins at or below ``window.band_limit_hz`` (all bins when unset)."""
    if window.band_limit_hz is None:
        return magnitude
    keep = int(np.floor(window.band_limit_hz * window.fft_size / sample_rate_hz)) + 1
    return magnitude[:, : max(1, min(keep, magnitude.shape[1]))]


def log_compress(magnitude: np.ndarray) -> np.ndarray:
    """Elementwise ``log(1 + x)`` of a non-negative matrix."""
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if np.any(magnitude < 0):
        msg = "log_compress expects non-negative magnitudes"
        raise ContractError(msg)
    return np.log1p(magnitude)


def resize_bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize with the corner samples pinned to the output corners."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:  # noqa: PLR2004
        msg = f"resize expects a non-empty 2-D matrix, got shape {values.shape}"
        raise ContractError(msg)
    factors = (height / values.shape[0], width / values.shape[1])
    resized = zoom(values, factors, order=1, mode="nearest", grid_mode=False)
    if resized.shape != (height, width):
        msg = f"resize produced {resized.shape}, expected {(height, width)}"
        raise ContractError(msg)
    return resized


def min_max_scale(values: np.ndarray) -> np.ndarray:
    """Map to [0, 1]; a constant matrix maps to zeros."""
    low, high = float(values.min()), float(values.max())
    if high <= low:
        return np.zeros_like(values)
    return (values - low) / (high - low)


def to_image(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize a matrix to ``height × width`` and min-max scale it."""
    return min_max_scale(resize_bilinear(values, height, width))


def spectrogram(  # noqa: PLR0913
    segment: SignalSegment | np.ndarray,
    window: WindowSpec,
    sample_rate_hz: float,
    height: int,
    width: int,
    label: str = "",
) -> Spectrogram:
    """Run the full segment-to-image pipeline: crop the band, then log, then scale."""
    magnitude = crop_band(np.abs(stft(segment, window)), window, sample_rate_hz)
    image = to_image(log_compress(magnitude), height, width)
    if isinstance(segment, SignalSegment):
        label = label or segment.label
    return Spectrogram(image, sample_rate_hz / window.fft_size, window.hop / sample_rate_hz, label)


def spectrogram_images(values: np.ndarray, regime: Regime, height: int, width: int) -> np.ndarray:
    """Turn an ``N × T`` stack of normalised segments into an ``N × height × width`` float32 stack."""
    images = np.empty((values.shape[0], height, width), dtype=np.float32)
    for i, row in enumerate(values):
        images[i] = spectrogram(row, regime.window, regime.sample_rate_hz, height, width).values
    return images


# --- on-disk cache ---


def write_cache(path: Path, spec: Spectrogram) -> None:
    """Write a magic line, a one-line JSON header and row-major float32 values."""
    header = {
        "height": int(spec.values.shape[0]),
        "width": int(spec.values.shape[1]),
        "freq_resolution_hz": spec.freq_resolution_hz,
        "time_step_s": spec.time_step_s,
        "label": spec.source_label,
        "dtype": "<f4",
    }
    with path.open("wb") as handle:
        handle.write(f"{CACHE_MAGIC}\n{json.dumps(header, sort_keys=True)}\n".encode())
        handle.write(np.ascontiguousarray(spec.values, dtype="<f4").tobytes())


def read_cache(path: Path) -> Spectrogram:
    """Read a file written by :func:`write_cache`."""
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        msg = f"Spectrogram cache {path} does not exist"
        raise DataError(msg) from None
    magic, _, rest = raw.partition(b"\n")
    if magic.decode("utf-8", errors="replace") != CACHE_MAGIC:
        msg = f"{path} is not a spectrogram cache file"
        raise DataError(msg)
    header_line, _, payload = rest.partition(b"\n")
    try:
        header = json.loads(header_line)
        shape = (int(header["height"]), int(header["width"]))
    except (ValueError, KeyError) as exc:
        msg = f"{path} has a corrupt header"
        raise DataError(msg) from exc
    expected = shape[0] * shape[1] * 4
    if len(payload) != expected:
        msg = f"{path} holds {len(payload)} bytes of values, header promises {expected}"
        raise DataError(msg)
    values = np.frombuffer(payload, dtype="<f4")
    return Spectrogram(
        values.reshape(shape).astype(np.float32),
        float(header["freq_resolution_hz"]),
        float(header["time_step_s"]),
        str(header["label"]),
    )


def write_preview(path: Path, spec: Spectrogram) -> None:
    """Save an 8-bit greyscale PNG with time left to right and low frequencies at the bottom."""
    pixels = np.flipud(spec.values.T)
    Image.fromarray(np.round(pixels * 255).astype(np.uint8)).save(path, format="PNG")
