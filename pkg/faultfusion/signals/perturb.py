"""
Corruptions for the robustness evaluation.

Each perturbation works on a stack of normalised segments (rows), after which
the rows are re-normalised so the model sees inputs on the scale it trained on.
"""

from enum import Enum

import numpy as np

from faultfusion.errors import ContractError
from faultfusion.schemas import RobustnessConfig
from faultfusion.signals.segment import zscore


class Perturbation(str, Enum):
    """Test-time corruptions, ``clean`` being the reference row."""

    CLEAN = "clean"
    GAUSSIAN = "gaussian_noise"
    HARMONICS = "harmonics"
    SPIKES = "spikes"


def add_gaussian_noise(values: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add white noise scaled per row so the realised SNR is exactly ``snr_db`` (infinite SNR adds nothing)."""
    if np.isinf(snr_db):
        return values.copy()
    noise = rng.standard_normal(values.shape)
    signal_power = np.mean(values**2, axis=1, keepdims=True)
    noise_power = np.mean(noise**2, axis=1, keepdims=True)
    target = signal_power / 10.0 ** (snr_db / 10.0)
    return values + noise * np.sqrt(target / noise_power)


def fundamental(values: np.ndarray, base_freq_hz: float, sample_rate_hz: float) -> tuple[float, float]:
    """Least-squares amplitude and phase of the ``base_freq_hz`` component of one row."""
    t = np.arange(values.size) / sample_rate_hz
    basis = np.stack([np.sin(2 * np.pi * base_freq_hz * t), np.cos(2 * np.pi * base_freq_hz * t)], axis=1)
    (a, b), *_ = np.linalg.lstsq(basis, values, rcond=None)
    return float(np.hypot(a, b)), float(np.arctan2(b, a))


def inject_harmonics(  # noqa: PLR0913
    values: np.ndarray,
    base_freqs_hz: np.ndarray,
    sample_rate_hz: float,
    orders: list[int],
    rel_amp: float,
) -> np.ndarray:
    """Add ``rel_amp`` times each row's fundamental amplitude at every harmonic in ``orders``."""
    t = np.arange(values.shape[1]) / sample_rate_hz
    out = values.copy()
    for row, f0 in enumerate(base_freqs_hz):
        amplitude, phase = fundamental(values[row], float(f0), sample_rate_hz)
        for order in orders:
            out[row] += rel_amp * amplitude * np.sin(2 * np.pi * order * f0 * t + order * phase)
    return out


def inject_spikes(values: np.ndarray, rel_amp: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Add ``round(rate * T)`` (at least one) signed spikes of ``rel_amp * max|x|`` per row."""
    length = values.shape[1]
    count = min(length, max(1, round(rate * length)))
    out = values.copy()
    for row in range(values.shape[0]):
        positions = rng.choice(length, size=count, replace=False)
        signs = rng.choice(np.array([-1.0, 1.0]), size=count)
        out[row, positions] += signs * rel_amp * np.max(np.abs(values[row]))
    return out


def apply_perturbation(
    values: np.ndarray,
    kind: Perturbation,
    config: RobustnessConfig,
    *,
    base_freqs_hz: np.ndarray,
    sample_rate_hz: float,
) -> np.ndarray:
    """Corrupt every row with ``kind`` and re-normalise it; ``clean`` returns the rows untouched."""
    rng = np.random.default_rng(config.seed)
    if kind is Perturbation.CLEAN:
        return values.copy()
    if kind is Perturbation.GAUSSIAN:
        corrupted = add_gaussian_noise(values, config.snr_db, rng)
    elif kind is Perturbation.HARMONICS:
        corrupted = inject_harmonics(
            values, base_freqs_hz, sample_rate_hz, config.harmonic_orders, config.harmonic_rel_amp
        )
    elif kind is Perturbation.SPIKES:
        corrupted = inject_spikes(values, config.spike_rel_amp, config.spike_rate, rng)
    else:
        msg = f"Unhandled perturbation {kind!r}"
        raise ContractError(msg)
    return np.stack([zscore(row)[0] for row in corrupted])
