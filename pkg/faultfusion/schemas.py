import hashlib
import json
from enum import Enum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StrictModel(BaseModel):
    """Base for every config document: unknown keys are rejected, not ignored."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class Channel(str, Enum):
    """Sensor channel a signal was recorded on."""

    CURRENT = "current"
    VIBRATION = "vibration"


# --- synthetic fault signatures ---


class HealthySignature(StrictModel):
    """A clean fundamental with no fault component."""

    kind: Literal["healthy"] = "healthy"


class SidebandSignature(StrictModel):
    """Two tones at ``base ± offset_hz``, the signature of rotor asymmetry."""

    kind: Literal["sidebands"] = "sidebands"
    offset_hz: float = Field(..., gt=0)
    rel_amp: float = Field(..., gt=0, le=1)


class ImpulseTrainSignature(StrictModel):
    """Exponentially decaying bursts repeating at ``rate_hz``, as from a localised bearing defect."""

    kind: Literal["impulse_train"] = "impulse_train"
    rate_hz: float = Field(..., gt=0)
    decay: float = Field(..., gt=0, description="Burst decay rate in 1/s.")
    rel_amp: float = Field(..., gt=0, le=1)


class HarmonicImbalanceSignature(StrictModel):
    """Extra integer harmonics of the fundamental, as from winding asymmetry."""

    kind: Literal["harmonic_imbalance"] = "harmonic_imbalance"
    orders: list[int] = Field(..., min_length=1)
    rel_amps: list[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_pairs(self) -> "HarmonicImbalanceSignature":
        if len(self.orders) != len(self.rel_amps):
            msg = "orders and rel_amps must have the same length"
            raise ValueError(msg)
        if any(order < 2 for order in self.orders):  # noqa: PLR2004
            msg = "harmonic orders start at 2"
            raise ValueError(msg)
        if any(not 0 < amp <= 1 for amp in self.rel_amps):
            msg = "rel_amps must lie in (0, 1]"
            raise ValueError(msg)
        return self


Signature = Annotated[
    HealthySignature | SidebandSignature | ImpulseTrainSignature | HarmonicImbalanceSignature,
    Field(discriminator="kind"),
]


class SynthClassSpec(StrictModel):
    """Recipe for one synthetic fault class."""

    name: str
    base_freq_hz: float = Field(60.0, gt=0)
    signature: Signature = Field(default_factory=HealthySignature)
    noise_floor: float = Field(0.05, ge=0, description="White-noise std relative to the unit fundamental.")
    channel: Channel = Channel.CURRENT

    @model_validator(mode="after")
    def _check_offset(self) -> "SynthClassSpec":
        if isinstance(self.signature, SidebandSignature) and self.signature.offset_hz >= self.base_freq_hz:
            msg = "sideband offset_hz must be below base_freq_hz"
            raise ValueError(msg)
        return self


# --- preprocessing ---


class WindowKind(str, Enum):
    """Analysis window shapes."""

    HANN = "hann"
    BLACKMAN_HARRIS = "blackman_harris"


class WindowSpec(StrictModel):
    """STFT framing: window shape, length, hop, FFT size and an optional band crop."""

    kind: WindowKind = WindowKind.HANN
    length: int = Field(..., gt=0)
    hop: int = Field(..., gt=0)
    fft_size: int = Field(..., gt=0)
    band_limit_hz: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_framing(self) -> "WindowSpec":
        if not 0 < self.hop <= self.length <= self.fft_size:
            msg = f"need 0 < hop <= length <= fft_size, got hop={self.hop} length={self.length} fft={self.fft_size}"
            raise ValueError(msg)
        if self.fft_size & (self.fft_size - 1):
            msg = f"fft_size must be a power of two, got {self.fft_size}"
            raise ValueError(msg)
        return self


class StftConfig(StrictModel):
    """Which regime preset to use and the spectrogram image size."""

    regime: str = "desk"
    image_height: int = Field(64, ge=2)
    image_width: int = Field(64, ge=2)
    # Replaces the regime's window when set; the regime still supplies rate and T.
    window: WindowSpec | None = None


class DataConfig(StrictModel):
    """Where segments come from and how they are split."""

    family: str = "benchmark"
    classes: list[SynthClassSpec] | None = None
    manifest: str | None = None
    per_class: int = Field(400, ge=2)
    split: float = Field(0.8, gt=0, lt=1)
    val_fraction: float = Field(0.1, ge=0, lt=0.5)
    # Override every preset class's noise floor (explicit ``classes`` keep their own).
    noise_floor: float | None = Field(None, ge=0)
    segment_length: int | None = Field(None, ge=2)
    sample_rate_hz: float | None = Field(None, gt=0)


# --- model ---


class TemporalConfig(StrictModel):
    """Two conv/pool stages feeding an LSTM."""

    conv1_filters: int = Field(64, ge=1)
    conv1_kernel: int = Field(7, ge=1)
    conv2_filters: int = Field(128, ge=1)
    conv2_kernel: int = Field(5, ge=1)
    stride: int = Field(1, ge=1)
    pool_size: int = Field(2, ge=1)
    pool_stride: int = Field(2, ge=1)

    def output_length(self, segment_length: int) -> int:
        """Sequence length handed to the recurrent cell for segments of ``segment_length``."""
        length = segment_length
        for kernel in (self.conv1_kernel, self.conv2_kernel):
            length = (length - kernel) // self.stride + 1
            if length < self.pool_size:
                return 0
            length = (length - self.pool_size) // self.pool_stride + 1
        return length


class SpectralConfig(StrictModel):
    """Compact residual stack standing in for a full-size image backbone."""

    blocks: int = Field(3, ge=1)
    channels: list[int] = Field(default_factory=lambda: [8, 16, 32])

    @model_validator(mode="after")
    def _check_schedule(self) -> "SpectralConfig":
        if len(self.channels) != self.blocks or any(c < 1 for c in self.channels):
            msg = f"channels schedule {self.channels} must list {self.blocks} positive widths"
            raise ValueError(msg)
        return self


class EncoderConfig(StrictModel):
    """Embedding width and the two stream architectures."""

    embed_dim: int = Field(64, ge=2)
    temporal: TemporalConfig = Field(default_factory=TemporalConfig)
    spectral: SpectralConfig = Field(default_factory=SpectralConfig)


class HypergraphConfig(StrictModel):
    """KNN hyperedge construction over feature-dimension nodes."""

    k: int = Field(5, ge=1)
    theta_intra: float = Field(0.9, ge=-1, le=1)
    theta_cross: float = Field(0.9, ge=-1, le=1)


class PropagationOperator(str, Enum):
    """Matrix the HGNN layer multiplies node features by."""

    LAPLACIAN = "laplacian_L"
    SMOOTHING = "smoothing_I_minus_L"


class HgnnConfig(StrictModel):
    """Hypergraph propagation depth and operator, plus the attention head count."""

    layers: int = Field(2, ge=1)
    operator: PropagationOperator = PropagationOperator.LAPLACIAN
    attention_heads: int = Field(4, ge=1)


class MiningMode(str, Enum):
    """How triplets are drawn from a batch."""

    BATCH_HARD = "batch_hard"
    RANDOM = "random"


class LossConfig(StrictModel):
    """Composite objective: cross entropy plus ``triplet_weight`` (λ) times the triplet hinge."""

    margin: float = Field(0.27, gt=0)
    triplet_weight: float = Field(0.5, ge=0)
    mining: MiningMode = MiningMode.BATCH_HARD
    distance: Literal["euclidean"] = "euclidean"


class AblationSwitches(StrictModel):
    """
    Architecture-block toggles.

    ``w_t``/``w_s`` put the temporal/spectral branch into the fusion, ``w_cr`` adds
    the cross-modality branch (which needs both encoders, so they are built
    whenever it is on), ``w_cl`` enables the triplet term and ``w_att`` the
    attention fusion (an unweighted mean otherwise).
    """

    w_t: bool = True
    w_s: bool = True
    w_cr: bool = True
    w_cl: bool = True
    w_att: bool = True

    @model_validator(mode="after")
    def _check_branches(self) -> "AblationSwitches":
        if not (self.w_t or self.w_s or self.w_cr):
            msg = "at least one of w_t, w_s, w_cr must be enabled"
            raise ValueError(msg)
        return self

    @property
    def modalities(self) -> tuple[str, ...]:
        """Fusion branches in canonical order."""
        return tuple(m for m, on in (("t", self.w_t), ("s", self.w_s), ("c", self.w_cr)) if on)

    @property
    def needs_temporal(self) -> bool:
        """Whether the temporal encoder is built."""
        return self.w_t or self.w_cr

    @property
    def needs_spectral(self) -> bool:
        """Whether the spectral encoder is built."""
        return self.w_s or self.w_cr

    def label(self) -> str:
        """Short name such as ``t+s+cr+cl+att``."""
        names = [("t", self.w_t), ("s", self.w_s), ("cr", self.w_cr), ("cl", self.w_cl), ("att", self.w_att)]
        return "+".join(name for name, on in names if on)


class TrainConfig(StrictModel):
    """Optimiser and loop settings."""

    lr: float = Field(1e-4, gt=0)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)
    epochs: int = Field(200, ge=1)
    batch_size: int = Field(32, ge=2)
    seed: int = 0
    precision: Literal["float32", "float64"] = "float32"
    switches: AblationSwitches = Field(default_factory=AblationSwitches)


class RobustnessConfig(StrictModel):
    """Perturbations applied by ``perturb-eval``."""

    snr_db: float = 10.0
    harmonic_orders: list[int] = Field(default_factory=lambda: [3, 5, 7])
    harmonic_rel_amp: float = Field(0.2, gt=0)
    spike_rel_amp: float = Field(0.2, gt=0)
    spike_rate: float = Field(0.01, gt=0, le=1)
    seed: int = 1234
    # Fundamental used for harmonic injection; each synthetic class's own base frequency when unset.
    base_freq_hz: float | None = Field(None, gt=0)


class ExperimentConfig(StrictModel):
    """The JSON document every command is driven by."""

    data: DataConfig = Field(default_factory=DataConfig)
    stft: StftConfig = Field(default_factory=StftConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    hypergraph: HypergraphConfig = Field(default_factory=HypergraphConfig)
    hgnn: HgnnConfig = Field(default_factory=HgnnConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    robustness: RobustnessConfig = Field(default_factory=RobustnessConfig)

    def config_hash(self, command: str) -> str:
        """SHA-256 over the canonical JSON of this config and the command name."""
        canonical = json.dumps({"command": command, "config": self.model_dump(mode="json")}, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- reports ---


class ClassMetrics(BaseModel):
    """Per-class precision, recall and F1 with the class's test count."""

    name: str
    precision: float
    recall: float
    f1: float
    support: int


class MetricsReport(BaseModel):
    """Everything ``evaluate`` computes from one pass over a test set."""

    classes: list[str]
    confusion: list[list[int]]
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None = None
    per_class: list[ClassMetrics]
    samples: int
    latency_ms_per_sample: float | None = Field(None, description="Wall-clock inference time; not deterministic.")

    @field_validator("confusion")
    @classmethod
    def _square(cls, value: list[list[int]]) -> list[list[int]]:
        if any(len(row) != len(value) for row in value):
            msg = "confusion matrix must be square"
            raise ValueError(msg)
        return value


class HistoryRecord(BaseModel):
    """One line of ``history.jsonl``."""

    epoch: int
    loss_total: float
    loss_ce: float
    loss_triplet: float
    val_acc: float | None


class RunManifest(BaseModel):
    """Contents of ``run.json``, written by every command."""

    command: str
    config_hash: str
    seed: int
    created_at: str
    config: dict
    artifacts: list[str] = Field(default_factory=list)
    # Wall-clock measurements; like created_at they differ between reruns.
    timings: dict[str, float] = Field(default_factory=dict)


# --- ingested data ---


class ManifestEntry(StrictModel):
    """One CSV recording listed in a dataset manifest; ``path`` is relative to the manifest."""

    path: str
    label: str
    sample_rate_hz: float = Field(..., gt=0)
    channel: Channel = Channel.CURRENT
    value_column: int | str = 0
    skip_header: bool = False


class DatasetManifest(StrictModel):
    """A list of labelled recordings to segment instead of synthesising classes."""

    entries: list[ManifestEntry] = Field(..., min_length=1)
