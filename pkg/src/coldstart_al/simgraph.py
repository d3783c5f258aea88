"""Sparse pairwise similarity graphs over an embedded dataset.

Three constructions are supported, all emitting weights in [0, 1] with no
stored self-edges:

- ``C``: same-cluster indicator,
- ``NN``: directed k-nearest-neighbor indicator (ties broken by smaller
  element index),
- ``RBF``: locally scaled Gaussian kernel ``exp(-d_ij^2 / (sigma_i sigma_j))``
  where ``sigma_i`` is a low quantile of the distances out of element i.

Graphs may also be built from subspace distance tables that were rescaled by
``sqrt(dims)`` so that squared distances are comparable across subspaces of
different dimensionality (first moment of a chi-square with ``dims`` degrees
of freedom).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .dataset import ClusterAssignment, EmbeddedDataset

RBF_SPARSITY_EPS = 1e-6

VARIANTS = ("C", "NN", "RBF")


@dataclass
class SimilaritySpec:
    """Knobs for graph construction; ``variant`` selects the method."""

    variant: str = "NN"
    knn_k: int = 10
    sigma_quantile: float = 0.02
    rescale_by_dim: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if not 0.0 < self.sigma_quantile < 1.0:
            raise ValueError("sigma_quantile must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "SimilaritySpec":
        return cls(
            variant=d.get("variant", "NN"),
            knn_k=int(d.get("knn_k", 10)),
            sigma_quantile=float(d.get("sigma_quantile", 0.02)),
            rescale_by_dim=bool(d.get("rescale_by_dim", False)),
        )


class SimilarityGraph:
    """Immutable sparse directed graph with weights in [0, 1]."""

    def __init__(self, weights: sparse.spmatrix, variant: str):
        w = sparse.csr_matrix(weights, copy=True)
        if w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        w.setdiag(0.0)
        w.eliminate_zeros()
        w.sort_indices()
        if w.nnz and (w.data.min() < 0.0 or w.data.max() > 1.0 + 1e-12):
            raise ValueError("edge weights must lie in [0, 1]")
        self.weights = w
        self.variant = variant
        self._prepared = None

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def nnz(self) -> int:
        return self.weights.nnz

    def out_weight_sums(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    def in_weight_sums(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=0)).ravel()

    def edges(self):
        """Yield (i, j, w) triples in row-major order."""
        coo = self.weights.tocoo()
        for i, j, w in zip(coo.row, coo.col, coo.data):
            yield int(i), int(j), float(w)


def pairwise_distances(dataset: EmbeddedDataset) -> np.ndarray:
    """Dense Euclidean distance table (symmetric, zero diagonal)."""
    return cdist(dataset.vectors, dataset.vectors)


def rescale_distances(distances: np.ndarray, dims_of_subspace: int) -> np.ndarray:
    """Divide squared distances by the subspace dimensionality.

    Equivalent to ``d / sqrt(dims)``; makes expected squared distances between
    standardized points comparable across subspaces of different width.
    """
    if dims_of_subspace < 1:
        raise ValueError("subspace dimensionality must be >= 1")
    return distances / np.sqrt(float(dims_of_subspace))


def local_sigmas(distances: np.ndarray, quantile: float) -> np.ndarray:
    """Per-element kernel bandwidths: a low quantile of the distances out of i.

    A zero sigma (duplicate-heavy data) is replaced by the smallest positive
    distance out of i, or 1.0 if every distance from i is zero.
    """
    n = distances.shape[0]
    off_diag = distances[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    sigmas = np.quantile(off_diag, quantile, axis=1)
    for i in np.flatnonzero(sigmas <= 0.0):
        positive = off_diag[i][off_diag[i] > 0.0]
        sigmas[i] = positive.min() if len(positive) else 1.0
        warnings.warn(
            f"zero distance quantile for element {i}; sigma replaced by {sigmas[i]:g}"
        )
    return sigmas


def build_similarity(
    dataset: EmbeddedDataset | None,
    clusters: ClusterAssignment | None,
    spec: SimilaritySpec,
    distances: np.ndarray | None = None,
) -> SimilarityGraph:
    """Build the similarity graph for ``spec.variant``.

    ``distances`` may be passed to reuse a precomputed (optionally rescaled)
    table; otherwise it is derived from the dataset vectors, rescaled by
    dimensionality when ``spec.rescale_by_dim`` is set.
    """
    if spec.variant == "C":
        if clusters is None:
            raise ValueError("variant 'C' needs a cluster assignment")
        return _cluster_graph(clusters)

    if distances is None:
        if dataset is None:
            raise ValueError(f"variant {spec.variant!r} needs dataset vectors")
        distances = pairwise_distances(dataset)
        if spec.rescale_by_dim:
            distances = rescale_distances(distances, dataset.dims)
    n = distances.shape[0]

    if spec.variant == "NN":
        if spec.knn_k >= n:
            raise ValueError(f"knn_k={spec.knn_k} must be < n={n}")
        return _knn_graph(distances, spec.knn_k)
    return _rbf_graph(distances, spec.sigma_quantile)


def _cluster_graph(clusters: ClusterAssignment) -> SimilarityGraph:
    rows, cols = [], []
    for members in clusters.members.values():
        s = len(members)
        if s < 2:
            continue
        rows.append(np.repeat(members, s - 1))
        grid = np.tile(members, (s, 1))
        cols.append(grid[~np.eye(s, dtype=bool)])
    if rows:
        row = np.concatenate(rows)
        col = np.concatenate(cols)
    else:
        row = col = np.empty(0, dtype=np.int64)
    w = sparse.csr_matrix(
        (np.ones(len(row)), (row, col)), shape=(clusters.n, clusters.n)
    )
    return SimilarityGraph(w, "C")


def _knn_graph(distances: np.ndarray, k: int) -> SimilarityGraph:
    n = distances.shape[0]
    rows = np.repeat(np.arange(n), k)
    cols = np.empty(n * k, dtype=np.int64)
    idx = np.arange(n)
    for i in range(n):
        d = distances[i].copy()
        d[i] = np.inf
        # lexsort: primary key distance, ties resolved by smaller index
        cols[i * k : (i + 1) * k] = np.lexsort((idx, d))[:k]
    w = sparse.csr_matrix((np.ones(n * k), (rows, cols)), shape=(n, n))
    return SimilarityGraph(w, "NN")


def _rbf_graph(distances: np.ndarray, quantile: float) -> SimilarityGraph:
    sigmas = local_sigmas(distances, quantile)
    scale = np.outer(sigmas, sigmas)
    w = np.exp(-(distances**2) / scale)
    np.fill_diagonal(w, 0.0)
    w[w < RBF_SPARSITY_EPS] = 0.0
    return SimilarityGraph(sparse.csr_matrix(w), "RBF")


def dump_graph(graph: SimilarityGraph, path: str | Path) -> None:
    """Text dump: header ``n variant`` then one ``i j w`` line per edge."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{graph.n} {graph.variant}\n")
        for i, j, w in graph.edges():
            fh.write(f"{i} {j} {w!r}\n")


def load_graph(path: str | Path) -> SimilarityGraph:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        n, variant = int(header[0]), header[1]
        rows, cols, vals = [], [], []
        for line in fh:
            if not line.strip():
                continue
            i, j, w = line.split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(w))
    return SimilarityGraph(
        sparse.csr_matrix((vals, (rows, cols)), shape=(n, n)), variant
    )
