from dataclasses import dataclass

import numpy as np

from faultfusion.model.network import ForwardResult
from faultfusion.schemas import AblationSwitches, LossConfig
from faultfusion.tensor import Tensor, ops
from faultfusion.training.triplets import mine_triplets, triplet_loss


@dataclass(frozen=True)
class LossBreakdown:
    """The differentiable total and its logged components."""

    total: Tensor
    ce: float
    triplet: float
    weight: float
    triplets: int


def total_loss(logits: Tensor, labels: np.ndarray, triplet: Tensor, weight: float) -> Tensor:
    """Mean cross entropy plus ``weight`` times the triplet term; exactly the cross entropy at weight 0."""
    return _combine(ops.cross_entropy(logits, labels), triplet, weight)


def _combine(ce: Tensor, triplet: Tensor, weight: float) -> Tensor:
    if weight == 0:
        return ce
    return ops.add(ce, ops.mul(triplet, weight))


def composite_loss(
    result: ForwardResult,
    labels: np.ndarray,
    config: LossConfig,
    switches: AblationSwitches,
    rng: np.random.Generator,
) -> LossBreakdown:
    """
    The training objective for one batch.

    Triplets are mined once on the concatenated refined embeddings and reused
    for every modality. The contrastive term is dropped when ``w_cl`` is off.
    """
    weight = config.triplet_weight if switches.w_cl else 0.0
    ce = ops.cross_entropy(result.logits, labels)
    if weight == 0:
        return LossBreakdown(ce, ce.item(), 0.0, 0.0, 0)

    joined = np.concatenate([result.refined[m].data for m in switches.modalities], axis=1)
    triplets = mine_triplets(joined, labels, config.mining, rng)
    triplet = triplet_loss(triplets, [result.refined[m] for m in switches.modalities], config.margin)
    return LossBreakdown(_combine(ce, triplet, weight), ce.item(), triplet.item(), weight, len(triplets))
