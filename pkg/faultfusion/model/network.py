"""
The full multimodal network: encoders, per-batch hypergraphs, HGNN refinement,
fusion and the classifier head, wired according to the ablation switches.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from faultfusion.errors import CheckpointError, ContractError
from faultfusion.model.encoders import SpectralEncoder, TemporalEncoder, concat_cross
from faultfusion.model.fusion import AttentionFusion, ClassifierHead, HypergraphRefiner, mean_fusion
from faultfusion.model.hypergraph import Hypergraph, build_modal_graphs
from faultfusion.schemas import ExperimentConfig
from faultfusion.tensor import ParamStore, Tensor, ops, read_checkpoint, save_checkpoint

logger = logging.getLogger("faultfusion")


@dataclass(frozen=True)
class ForwardResult:
    """
    Everything one forward pass produces.

    ``refined`` holds the final HGNN outputs per modality (``c`` at width 2D,
    before its projection); ``alpha`` is ``(heads, B, M)`` or None without attention.
    """

    logits: Tensor
    embeddings: dict[str, Tensor]
    refined: dict[str, Tensor]
    fused: Tensor
    alpha: np.ndarray | None
    graphs: dict[str, Hypergraph]


def eval_batches(count: int, size: int) -> list[slice]:
    """Consecutive slices of ``size``; a trailing single row joins the previous slice so every batch has 2+."""
    if count < 2:  # noqa: PLR2004
        msg = f"need at least 2 samples to build per-batch graphs, got {count}"
        raise ContractError(msg)
    starts = list(range(0, count, size))
    if count - starts[-1] == 1:
        starts.pop()
    return [slice(start, stop) for start, stop in zip(starts, [*starts[1:], count], strict=True)]


class FusionNetwork:
    """Parameters and forward pass of the hypergraph attention network."""

    def __init__(
        self,
        config: ExperimentConfig,
        classes: tuple[str, ...],
        segment_length: int,
        image_shape: tuple[int, int],
    ) -> None:
        self.config = config
        self.classes = tuple(classes)
        self.segment_length = segment_length
        self.image_shape = tuple(image_shape)
        switches = config.train.switches
        self.modalities = switches.modalities
        dim = config.encoder.embed_dim

        self.params = ParamStore(np.random.default_rng(np.random.SeedSequence([config.train.seed, 2])))
        self.temporal = (
            TemporalEncoder(self.params, config.encoder.temporal, dim, segment_length)
            if switches.needs_temporal
            else None
        )
        self.spectral = (
            SpectralEncoder(self.params, config.encoder.spectral, dim, self.image_shape)
            if switches.needs_spectral
            else None
        )
        widths = {"t": dim, "s": dim, "c": 2 * dim}
        self.refiner = HypergraphRefiner(
            self.params,
            {m: widths[m] for m in self.modalities},
            config.hgnn.layers,
            config.hgnn.operator,
        )
        if "c" in self.modalities:
            self.cross_proj_w = self.params.fan_in_uniform("hgnn.c.proj.weight", (2 * dim, dim), 2 * dim)
            self.cross_proj_b = self.params.zeros("hgnn.c.proj.bias", (dim,))
        self.fusion = (
            AttentionFusion(self.params, self.modalities, dim, config.hgnn.attention_heads)
            if switches.w_att
            else None
        )
        self.head = ClassifierHead(self.params, dim, len(self.classes))
        logger.debug("Built network %s with %d parameter tensors", switches.label(), len(self.params))

    def forward(self, signals: np.ndarray, images: np.ndarray | None) -> ForwardResult:
        """Run one batch; records on the active tape, if any."""
        embeddings: dict[str, Tensor] = {}
        if self.temporal is not None:
            embeddings["t"] = self.temporal.encode(signals)
        if self.spectral is not None:
            if images is None:
                msg = "the spectral stream needs spectrogram images"
                raise ContractError(msg)
            embeddings["s"] = self.spectral.encode(images)
        if "c" in self.modalities:
            embeddings["c"] = concat_cross(embeddings["t"], embeddings["s"])

        detached = {m: embeddings[m].data for m in ("t", "s") if m in embeddings}
        graphs = build_modal_graphs(detached, self.config.hypergraph, self.modalities)
        refined = self.refiner.refine(embeddings, graphs)

        to_fuse = dict(refined)
        if "c" in to_fuse:
            to_fuse["c"] = ops.linear(refined["c"], self.cross_proj_w, self.cross_proj_b)
        if self.fusion is not None:
            fused, alpha = self.fusion.fuse(to_fuse)
        else:
            fused, alpha = mean_fusion(to_fuse, self.modalities), None
        return ForwardResult(self.head.logits(fused), embeddings, refined, fused, alpha, graphs)

    def predict_logits(self, signals: np.ndarray, images: np.ndarray | None, batch_size: int) -> np.ndarray:
        """
        Logits for a whole set, evaluated batch by batch outside any tape.

        Graphs are built per batch, so rows are visited in a seeded random order:
        a set stored class by class is still scored in mixed batches, as in
        training. The result is in input order.
        """
        order = np.random.default_rng(np.random.SeedSequence([self.config.train.seed, 5])).permutation(len(signals))
        logits = np.empty((len(signals), len(self.classes)))
        for rows in eval_batches(len(signals), batch_size):
            index = order[rows]
            batch_images = None if images is None else images[index]
            logits[index] = self.forward(signals[index], batch_images).logits.data
        return logits

    # --- persistence ---

    def metadata(self) -> dict[str, Any]:
        """What :meth:`from_checkpoint` needs to rebuild this architecture."""
        return {
            "classes": list(self.classes),
            "config": self.config.model_dump(mode="json"),
            "image_shape": list(self.image_shape),
            "segment_length": self.segment_length,
        }

    def save(self, path: Path, extra: dict[str, Any] | None = None) -> None:
        """Write an ``MMHCAN-CKPT-1`` checkpoint."""
        save_checkpoint(path, self.params, {**self.metadata(), **(extra or {})})

    @classmethod
    def from_checkpoint(cls, path: Path) -> tuple["FusionNetwork", dict[str, Any]]:
        """Rebuild a network from a checkpoint; returns it with the checkpoint metadata."""
        state, metadata = read_checkpoint(path)
        try:
            config = ExperimentConfig.model_validate(metadata["config"])
            classes, image_shape = tuple(metadata["classes"]), tuple(metadata["image_shape"])
            network = cls(config, classes, metadata["segment_length"], image_shape)
        except (KeyError, ValueError) as exc:
            msg = f"Checkpoint {path} has unusable metadata: {exc}"
            raise CheckpointError(msg) from exc
        try:
            network.params.load_state(state)
        except ContractError as exc:
            msg = f"Checkpoint {path} does not match its recorded architecture: {exc}"
            raise CheckpointError(msg) from exc
        return network, metadata
