"""
Value objects passed between the signal stages.

A :class:`RawSignal` is one continuous recording (synthetic or ingested); a
:class:`SignalSegment` is a fixed-length, z-score normalised slice of one, which
is the unit every later stage (STFT, encoders, datasets) works on.
"""

from dataclasses import dataclass

import numpy as np

from faultfusion.errors import DataError
from faultfusion.schemas import Channel


@dataclass(frozen=True)
class RawSignal:
    """A labelled 1-D amplitude series at a known sample rate."""

    samples: np.ndarray
    sample_rate_hz: float
    label: str
    channel: Channel = Channel.CURRENT

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            msg = f"sample_rate_hz must be positive, got {self.sample_rate_hz}"
            raise DataError(msg)
        if self.samples.ndim != 1 or self.samples.size == 0:
            msg = f"samples must be a non-empty 1-D series, got shape {self.samples.shape}"
            raise DataError(msg)

    @property
    def duration_s(self) -> float:
        """Length of the recording in seconds."""
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class SignalSegment:
    """
    A normalised slice of a :class:`RawSignal`.

    ``mu`` and ``sigma`` are the statistics removed by normalisation. A constant
    slice has nothing to scale by: its values are all zero, ``sigma`` is 0 and
    ``degenerate`` is set.
    """

    values: np.ndarray
    mu: float
    sigma: float
    label: str
    channel: Channel = Channel.CURRENT
    degenerate: bool = False

    @property
    def length(self) -> int:
        """Number of samples T."""
        return int(self.values.size)
