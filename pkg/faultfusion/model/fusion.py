"""HGNN propagation over feature-dimension nodes, attention fusion across modalities and the dense head."""

import numpy as np

from faultfusion.errors import DimensionError
from faultfusion.model.hypergraph import Hypergraph
from faultfusion.schemas import PropagationOperator
from faultfusion.tensor import ParamStore, Tensor, ops


def propagation_matrix(graph: Hypergraph, operator: PropagationOperator) -> np.ndarray:
    """``L`` itself, or the smoothing operator ``I - L``."""
    if operator is PropagationOperator.SMOOTHING:
        return np.eye(graph.node_count) - graph.laplacian
    return graph.laplacian


def hgnn_layer(features: Tensor, propagation: np.ndarray, weight: Tensor) -> Tensor:
    """
    ``ReLU(F · P · W)`` for a ``(B, N)`` batch whose columns are the graph's nodes.

    Per sample this is ``ReLU(W^T · P · f)`` for the sample's node vector ``f``; ``P`` is
    symmetric and constant for the batch, so only ``F`` and ``W`` receive gradients.
    """
    nodes = features.shape[1] if features.ndim == 2 else -1  # noqa: PLR2004
    if propagation.shape != (nodes, nodes) or weight.ndim != 2 or weight.shape[0] != nodes:  # noqa: PLR2004
        msg = (
            f"hgnn_layer: features {features.shape}, operator {propagation.shape} "
            f"and weight {weight.shape} do not agree on the node count"
        )
        raise DimensionError(msg)
    operator = Tensor(propagation, dtype=features.dtype.type)
    return ops.relu(ops.matmul(ops.matmul(features, operator), weight))


class HypergraphRefiner:
    """Stacked HGNN layers per modality, registered under ``hgnn.<m>.layer<l>.weight``."""

    def __init__(
        self,
        params: ParamStore,
        widths: dict[str, int],
        layers: int,
        operator: PropagationOperator,
        prefix: str = "hgnn",
    ) -> None:
        self.operator = operator
        self.weights: dict[str, list[Tensor]] = {
            modality: [
                params.fan_in_uniform(f"{prefix}.{modality}.layer{layer}.weight", (width, width), width)
                for layer in range(layers)
            ]
            for modality, width in widths.items()
        }

    def refine(self, embeddings: dict[str, Tensor], graphs: dict[str, Hypergraph]) -> dict[str, Tensor]:
        """Run every modality through its layers on its own graph."""
        refined = {}
        for modality, weights in self.weights.items():
            propagation = propagation_matrix(graphs[modality], self.operator)
            features = embeddings[modality]
            for weight in weights:
                features = hgnn_layer(features, propagation, weight)
            refined[modality] = features
        return refined


class AttentionFusion:
    """
    Multi-head softmax-over-modalities fusion.

    Each head scores every modality embedding with its own linear map to a
    scalar, normalises the scores across modalities per sample and takes the
    weighted sum. Head outputs are averaged.
    """

    def __init__(
        self,
        params: ParamStore,
        modalities: tuple[str, ...],
        embed_dim: int,
        heads: int,
        prefix: str = "fuse",
    ) -> None:
        self.modalities = modalities
        self.scorers = [
            {
                m: (
                    params.fan_in_uniform(f"{prefix}.head{h}.{m}.weight", (embed_dim, 1), embed_dim),
                    params.zeros(f"{prefix}.head{h}.{m}.bias", (1,)),
                )
                for m in modalities
            }
            for h in range(heads)
        ]

    def fuse(self, features: dict[str, Tensor]) -> tuple[Tensor, np.ndarray]:
        """Return the fused ``(B, D)`` tensor and the weights as a ``(heads, B, M)`` array."""
        batch = features[self.modalities[0]].shape[0]
        outputs, alphas = [], []
        for scorer in self.scorers:
            scores = ops.concat([ops.linear(features[m], *scorer[m]) for m in self.modalities], axis=1)
            alpha = ops.softmax(scores, axis=1)
            weighted = [
                ops.scale_rows(features[m], ops.reshape(ops.slice_columns(alpha, i, i + 1), (batch,)))
                for i, m in enumerate(self.modalities)
            ]
            outputs.append(_sum(weighted))
            alphas.append(alpha.data)
        return ops.mul(_sum(outputs), 1.0 / len(outputs)), np.stack(alphas)


def mean_fusion(features: dict[str, Tensor], modalities: tuple[str, ...]) -> Tensor:
    """Unweighted mean of the modality embeddings, used when attention is switched off."""
    return ops.mul(_sum([features[m] for m in modalities]), 1.0 / len(modalities))


def _sum(tensors: list[Tensor]) -> Tensor:
    total = tensors[0]
    for tensor in tensors[1:]:
        total = ops.add(total, tensor)
    return total


class ClassifierHead:
    """Dense layer from the fused embedding to class logits."""

    def __init__(self, params: ParamStore, embed_dim: int, classes: int, prefix: str = "head.dense") -> None:
        self.weight = params.fan_in_uniform(f"{prefix}.weight", (embed_dim, classes), embed_dim)
        self.bias = params.zeros(f"{prefix}.bias", (classes,))

    def logits(self, fused: Tensor) -> Tensor:
        """Unnormalised class scores."""
        return ops.linear(fused, self.weight, self.bias)


def classify(logits: Tensor | np.ndarray) -> np.ndarray:
    """Class probabilities from logits."""
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits, dtype=np.float64)
    return ops.softmax(Tensor(values, dtype=values.dtype.type), axis=-1).data
