import logging

import numpy as np

from faultfusion.errors import ContractError, EmptyResultError
from faultfusion.signals.base import RawSignal, SignalSegment

logger = logging.getLogger("faultfusion")

# Relative to max(1, |mu|): below this a slice counts as constant.
DEGENERATE_SIGMA = 1e-12


def zscore(values: np.ndarray) -> tuple[np.ndarray, float, float, bool]:
    """
    Standardise ``values`` to zero mean and unit (population) variance.

    Returns ``(normalised, mu, sigma, degenerate)``. A constant input comes back
    as zeros with ``sigma`` recorded as 0.
    """
    values = np.asarray(values, dtype=np.float64)
    mu = float(values.mean())
    sigma = float(values.std())
    if sigma <= DEGENERATE_SIGMA * max(1.0, abs(mu)):
        return np.zeros_like(values), mu, 0.0, True
    return (values - mu) / sigma, mu, sigma, False


def normalize(segment: SignalSegment) -> SignalSegment:
    """Re-standardise a segment's values, keeping its label and channel."""
    values, mu, sigma, degenerate = zscore(segment.values)
    return SignalSegment(values, mu, sigma, segment.label, segment.channel, degenerate)


def segment(signal: RawSignal, length: int) -> list[SignalSegment]:
    """
    Cut ``signal`` into ``len // length`` non-overlapping slices and normalise each.

    The trailing remainder is dropped, never padded.
    """
    if length < 2:  # noqa: PLR2004
        msg = f"segment length must be at least 2, got {length}"
        raise ContractError(msg)
    total = signal.samples.size
    if length > total:
        msg = f"segment length {length} exceeds the {total} samples of signal {signal.label!r}"
        raise EmptyResultError(msg)

    count = total // length
    slices = np.asarray(signal.samples[: count * length], dtype=np.float64).reshape(count, length)
    segments = []
    degenerate = 0
    for row in slices:
        values, mu, sigma, flagged = zscore(row)
        degenerate += flagged
        segments.append(SignalSegment(values, mu, sigma, signal.label, signal.channel, flagged))
    if degenerate:
        logger.warning("%d of %d segments of %r are constant; emitted as zeros", degenerate, count, signal.label)
    return segments
