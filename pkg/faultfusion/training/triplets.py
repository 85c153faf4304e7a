import logging

import numpy as np

from faultfusion.schemas import MiningMode
from faultfusion.tensor import Tensor, ops

logger = logging.getLogger("faultfusion")

# Keeps the gradient of sqrt finite when an anchor coincides with its partner.
DISTANCE_EPS = 1e-12

Triplet = tuple[int, int, int]


def pairwise_distances(embeddings: np.ndarray) -> np.ndarray:
    """Euclidean distances between all rows."""
    diff = embeddings[:, None, :] - embeddings[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def mine_triplets(
    embeddings: np.ndarray,
    labels: np.ndarray,
    mode: MiningMode = MiningMode.BATCH_HARD,
    rng: np.random.Generator | None = None,
) -> list[Triplet]:
    """
    One ``(anchor, positive, negative)`` triple per anchor that has both partners.

    ``batch_hard`` takes the farthest positive and the nearest negative (ties to
    the lower index); ``random`` draws both uniformly from ``rng``. A batch
    without any valid anchor yields an empty list.
    """
    labels = np.asarray(labels)
    if mode is MiningMode.RANDOM and rng is None:
        rng = np.random.default_rng(0)
    distances = pairwise_distances(np.asarray(embeddings, dtype=np.float64)) if mode is MiningMode.BATCH_HARD else None

    triplets: list[Triplet] = []
    indices = np.arange(labels.size)
    for anchor in indices:
        same = labels == labels[anchor]
        positives = indices[same & (indices != anchor)]
        negatives = indices[~same]
        if positives.size == 0 or negatives.size == 0:
            continue
        if distances is not None:
            positive = positives[np.argmax(distances[anchor, positives])]
            negative = negatives[np.argmin(distances[anchor, negatives])]
        else:
            positive = rng.choice(positives)
            negative = rng.choice(negatives)
        triplets.append((int(anchor), int(positive), int(negative)))
    return triplets


def _distance(a: Tensor, b: Tensor) -> Tensor:
    diff = ops.sub(a, b)
    return ops.sqrt(ops.add(ops.sum_(ops.mul(diff, diff), axis=1), DISTANCE_EPS))


def triplet_loss(triplets: list[Triplet], embeddings: dict[str, Tensor] | list[Tensor], margin: float) -> Tensor:
    """
    ``Σ_m mean_triplets max(0, d(a_m, p_m) - d(a_m, n_m) + margin)``.

    With no triplets the loss is a constant zero.
    """
    if not triplets:
        return Tensor(0.0)
    anchors, positives, negatives = (np.array(column) for column in zip(*triplets, strict=True))
    per_modality = embeddings.values() if isinstance(embeddings, dict) else embeddings
    total = None
    for features in per_modality:
        anchor = ops.gather_rows(features, anchors)
        d_pos = _distance(anchor, ops.gather_rows(features, positives))
        d_neg = _distance(anchor, ops.gather_rows(features, negatives))
        hinge = ops.relu(ops.add(ops.sub(d_pos, d_neg), margin))
        term = ops.mean(hinge)
        total = term if total is None else ops.add(total, term)
    return total
