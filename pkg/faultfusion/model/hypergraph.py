"""
KNN hypergraphs over feature-dimension nodes and their normalised Laplacian.

Each feature dimension of a modality is a node; its profile is that feature's
column across the current batch. Every node is the centroid of one hyperedge
holding itself plus its top-``k`` most cosine-similar nodes above a threshold,
so ``E == N`` and no node is ever isolated.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from faultfusion.errors import ContractError, DegenerateSimilarityError
from faultfusion.schemas import HypergraphConfig

logger = logging.getLogger("faultfusion")


@dataclass(frozen=True)
class Hypergraph:
    """Incidence matrix (nodes × edges) with its degrees and Laplacian."""

    incidence: np.ndarray
    node_degree: np.ndarray
    edge_degree: np.ndarray
    laplacian: np.ndarray

    @classmethod
    def from_incidence(cls, incidence: np.ndarray) -> "Hypergraph":
        """Derive degrees and the Laplacian of a binary incidence matrix."""
        incidence = np.asarray(incidence, dtype=np.float64)
        return cls(incidence, incidence.sum(axis=1), incidence.sum(axis=0), laplacian(incidence))

    @property
    def node_count(self) -> int:
        """N."""
        return int(self.incidence.shape[0])


def cosine_sim(x: np.ndarray, y: np.ndarray) -> float:
    """``x·y / (|x||y|)``; a zero vector has no direction and raises :class:`DegenerateSimilarityError`."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    norm = np.linalg.norm(x) * np.linalg.norm(y)
    if norm == 0:
        msg = "cosine similarity of a zero vector is undefined"
        raise DegenerateSimilarityError(msg)
    return float(np.clip(x @ y / norm, -1.0, 1.0))


def similarity_matrix(profiles: np.ndarray) -> np.ndarray:
    """
    Pairwise cosine similarities of the rows of ``profiles``.

    Rows with zero norm have no similarity to anything, including themselves;
    their entries are NaN.
    """
    profiles = np.asarray(profiles, dtype=np.float64)
    norms = np.linalg.norm(profiles, axis=1)
    live = norms > 0
    unit = np.zeros_like(profiles)
    unit[live] = profiles[live] / norms[live, None]
    sim = np.clip(unit @ unit.T, -1.0, 1.0)
    sim[~live, :] = np.nan
    sim[:, ~live] = np.nan
    return sim


def build_hyperedges(profiles: np.ndarray, k: int, threshold: float) -> np.ndarray:
    """
    Incidence matrix with one hyperedge per centroid node.

    Column ``i`` holds node ``i`` plus up to ``k`` other nodes whose similarity
    to it is at least ``threshold``, best first, ties to the lower index.
    """
    nodes = profiles.shape[0]
    if nodes < 2:  # noqa: PLR2004
        msg = f"a hypergraph needs at least 2 nodes, got {nodes}"
        raise ContractError(msg)
    if k < 1:
        msg = f"k must be at least 1, got {k}"
        raise ContractError(msg)

    sim = similarity_matrix(profiles)
    incidence = np.zeros((nodes, nodes), dtype=np.float64)
    for centroid in range(nodes):
        incidence[centroid, centroid] = 1.0
        row = sim[centroid].copy()
        row[centroid] = np.nan
        candidates = np.flatnonzero(np.nan_to_num(row, nan=-np.inf) >= threshold)
        if candidates.size == 0:
            continue
        # Stable sort on -similarity keeps lower indices first among ties.
        ranked = candidates[np.argsort(-row[candidates], kind="stable")]
        incidence[ranked[:k], centroid] = 1.0
    return incidence


def laplacian(incidence: np.ndarray) -> np.ndarray:
    """
    ``I - Dv^-1/2 H De^-1 H^T Dv^-1/2`` with unit edge weights.

    A node in no hyperedge gets ``Dv^-1/2 = 0``, leaving an identity row.
    """
    incidence = np.asarray(incidence, dtype=np.float64)
    edge_degree = incidence.sum(axis=0)
    if np.any(edge_degree == 0):
        msg = f"hyperedges {np.flatnonzero(edge_degree == 0).tolist()} are empty"
        raise ContractError(msg)
    node_degree = incidence.sum(axis=1)
    inv_sqrt = np.zeros_like(node_degree)
    np.divide(1.0, np.sqrt(node_degree), out=inv_sqrt, where=node_degree > 0)
    scaled = incidence * inv_sqrt[:, None]
    adjacency = (scaled / edge_degree) @ scaled.T
    lap = np.eye(incidence.shape[0]) - adjacency
    return 0.5 * (lap + lap.T)


def build_graph(embedding: np.ndarray, k: int, threshold: float) -> Hypergraph:
    """Hypergraph over the feature dimensions (columns) of a ``(B, N)`` batch matrix."""
    if embedding.ndim != 2 or embedding.shape[0] < 2:  # noqa: PLR2004
        msg = f"graph construction needs a batch of at least 2 samples, got shape {embedding.shape}"
        raise ContractError(msg)
    return Hypergraph.from_incidence(build_hyperedges(embedding.T, k, threshold))


def build_modal_graphs(
    embeddings: dict[str, np.ndarray],
    config: HypergraphConfig,
    modalities: tuple[str, ...] = ("t", "s", "c"),
) -> dict[str, Hypergraph]:
    """
    Intra-modality graphs for ``t``/``s`` and the cross graph for ``c``.

    ``embeddings`` holds detached ``(B, D)`` batches for ``t`` and ``s``; the
    cross graph is built over their concatenation with ``theta_cross``.
    """
    graphs = {}
    for modality in modalities:
        if modality == "c":
            joined = np.concatenate([embeddings["t"], embeddings["s"]], axis=1)
            graphs["c"] = build_graph(joined, config.k, config.theta_cross)
        else:
            graphs[modality] = build_graph(embeddings[modality], config.k, config.theta_intra)
    return graphs


def dump_graphs(graphs: dict[str, Hypergraph], directory: Path) -> list[Path]:
    """Write ``H_<m>.csv`` and ``L_<m>.csv`` for every graph; returns the written paths."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for modality, graph in graphs.items():
        for name, matrix in (("H", graph.incidence.astype(np.int64)), ("L", graph.laplacian)):
            path = directory / f"{name}_{modality}.csv"
            pd.DataFrame(matrix).to_csv(path, header=False, index=False, float_format="%.17g")
            written.append(path)
    logger.info("Wrote %d graph matrices to %s", len(written), directory)
    return written
