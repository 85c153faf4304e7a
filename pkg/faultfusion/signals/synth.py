"""
Synthetic motor-fault signals.

Every class is a unit-amplitude fundamental plus a fault signature plus white
Gaussian noise at ``noise_floor``. The presets below stand in for the rotor,
bearing and stator datasets: broken rotor bars show up as slip sidebands,
localised bearing defects as periodic decaying bursts and inter-turn shorts as
extra odd harmonics.
"""

from collections.abc import Callable

import numpy as np

from faultfusion.errors import ConfigError, ContractError
from faultfusion.schemas import (
    Channel,
    HarmonicImbalanceSignature,
    HealthySignature,
    ImpulseTrainSignature,
    SidebandSignature,
    SynthClassSpec,
)
from faultfusion.signals.base import RawSignal

TWO_PI = 2.0 * np.pi


def _signature(spec: SynthClassSpec, t: np.ndarray, phase: float, rng: np.random.Generator) -> np.ndarray:
    sig = spec.signature
    f0 = spec.base_freq_hz
    if isinstance(sig, HealthySignature):
        return np.zeros_like(t)
    if isinstance(sig, SidebandSignature):
        lower = np.sin(TWO_PI * (f0 - sig.offset_hz) * t + phase)
        upper = np.sin(TWO_PI * (f0 + sig.offset_hz) * t + phase)
        return sig.rel_amp * (lower + upper)
    if isinstance(sig, ImpulseTrainSignature):
        period = 1.0 / sig.rate_hz
        since_burst = np.mod(t - rng.uniform(0.0, period), period)
        return sig.rel_amp * np.exp(-sig.decay * since_burst)
    if isinstance(sig, HarmonicImbalanceSignature):
        out = np.zeros_like(t)
        for order, amp in zip(sig.orders, sig.rel_amps, strict=True):
            out += amp * np.sin(TWO_PI * order * f0 * t + order * phase)
        return out
    msg = f"Unhandled signature {sig!r}"
    raise ContractError(msg)


def synthesize(spec: SynthClassSpec, duration_s: float, sample_rate_hz: float, seed: int) -> RawSignal:
    """
    Render ``duration_s`` seconds of class ``spec`` at ``sample_rate_hz``.

    The output depends only on the arguments: the same seed gives bit-identical samples.
    """
    if sample_rate_hz <= 0 or duration_s <= 0:
        msg = f"duration_s and sample_rate_hz must be positive, got {duration_s} and {sample_rate_hz}"
        raise ContractError(msg)
    n = round(duration_s * sample_rate_hz)
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=np.float64) / sample_rate_hz
    phase = rng.uniform(0.0, TWO_PI)

    samples = np.sin(TWO_PI * spec.base_freq_hz * t + phase)
    samples += _signature(spec, t, phase, rng)
    if spec.noise_floor > 0:
        samples += rng.normal(0.0, spec.noise_floor, n)
    return RawSignal(samples, sample_rate_hz, spec.name, spec.channel)


# --- family presets ---


def _benchmark() -> list[SynthClassSpec]:
    return [
        SynthClassSpec(name="healthy"),
        SynthClassSpec(name="sidebands", signature=SidebandSignature(offset_hz=20.0, rel_amp=0.3)),
        SynthClassSpec(
            name="impulse_train",
            signature=ImpulseTrainSignature(rate_hz=25.0, decay=200.0, rel_amp=0.8),
        ),
        SynthClassSpec(
            name="harmonic_imbalance",
            signature=HarmonicImbalanceSignature(orders=[3, 5], rel_amps=[0.3, 0.2]),
        ),
    ]


def _rotor() -> list[SynthClassSpec]:
    # Broken bars at 5% slip: sidebands at 2*s*f0 = 6 Hz, growing with the number of bars.
    classes = [SynthClassSpec(name="healthy")]
    for bars, amp in enumerate((0.05, 0.1, 0.2, 0.4), start=1):
        classes.append(
            SynthClassSpec(name=f"brb{bars}", signature=SidebandSignature(offset_hz=6.0, rel_amp=amp)),
        )
    return classes


def _bearing() -> list[SynthClassSpec]:
    def bearing(name: str, rate_hz: float, amp: float) -> SynthClassSpec:
        return SynthClassSpec(
            name=name,
            base_freq_hz=30.0,
            channel=Channel.VIBRATION,
            signature=ImpulseTrainSignature(rate_hz=rate_hz, decay=400.0, rel_amp=amp),
        )

    return [
        SynthClassSpec(name="healthy", base_freq_hz=30.0, channel=Channel.VIBRATION),
        bearing("ball", 141.0, 0.6),
        bearing("outer_race", 107.0, 0.8),
        bearing("cage", 12.0, 0.5),
    ]


def _stator() -> list[SynthClassSpec]:
    return [
        SynthClassSpec(name="healthy"),
        SynthClassSpec(name="itsc", signature=HarmonicImbalanceSignature(orders=[3], rel_amps=[0.15])),
        SynthClassSpec(name="icsc", signature=HarmonicImbalanceSignature(orders=[3, 5, 7], rel_amps=[0.1, 0.1, 0.1])),
    ]


def _cross_domain() -> list[SynthClassSpec]:
    classes = []
    for family, build in (("rotor", _rotor), ("bearing", _bearing), ("stator", _stator)):
        classes.extend(spec.model_copy(update={"name": f"{family}/{spec.name}"}) for spec in build())
    return classes


FAMILY_PRESETS: dict[str, Callable[[], list[SynthClassSpec]]] = {
    "benchmark": _benchmark,
    "rotor": _rotor,
    "bearing": _bearing,
    "stator": _stator,
    "cross-domain": _cross_domain,
}


def family_classes(family: str, noise_floor: float | None = None) -> list[SynthClassSpec]:
    """Return the class recipes of a named family, optionally overriding every noise floor."""
    try:
        classes = FAMILY_PRESETS[family]()
    except KeyError:
        msg = f"Unknown signal family {family!r}; expected one of {sorted(FAMILY_PRESETS)}"
        raise ConfigError(msg) from None
    if noise_floor is not None:
        classes = [spec.model_copy(update={"noise_floor": noise_floor}) for spec in classes]
    return classes
