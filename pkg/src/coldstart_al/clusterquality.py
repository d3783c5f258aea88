"""Per-cluster conductance and score combination across two clusterings.

Conductance of cluster k on a weighted graph:

    phi_k = 1 - cut_k / min(a_k, a_kbar)

where ``cut_k`` is the total weight leaving the cluster, ``a_k`` the total
weight emitted by its members and ``a_kbar`` the total weight emitted by
everyone else. High conductance marks a dense, well separated cluster, which
is what makes it usable as a standalone per-cluster ranking signal.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ClusterAssignment
from .simgraph import SimilarityGraph

log = logging.getLogger(__name__)


@dataclass
class ClusterScores:
    """Map cluster id -> ranking score.

    Conductance producers keep values in [0, 1]; entropy-derived cluster
    scores can reach ln C, so the container itself only requires finiteness.
    """

    scores: dict[int, float]

    def __post_init__(self):
        for k, v in self.scores.items():
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"score for cluster {k} not finite and non-negative: {v}")

    def as_array(self, num_clusters: int) -> np.ndarray:
        """Scores as a vector indexed by cluster id - 1."""
        out = np.empty(num_clusters)
        for k in range(1, num_clusters + 1):
            out[k - 1] = self.scores[k]
        return out

    def ranked(self) -> list[int]:
        """Cluster ids by decreasing score, ties broken by ascending id."""
        return sorted(self.scores, key=lambda k: (-self.scores[k], k))


@dataclass
class ProductClustering:
    """Cartesian product of two clusterings over the same elements."""

    assignment: ClusterAssignment
    parents: dict[int, tuple[int, int]]


def conductance(graph: SimilarityGraph, clusters: ClusterAssignment) -> ClusterScores:
    """Per-cluster conductance on the directed edge set as stored.

    Degenerate denominators (min(a_k, a_kbar) == 0) resolve to 1 for a
    cluster with no outgoing cut and to 0 otherwise. On asymmetric graphs the
    raw ratio can leave [0, 1]; values are clamped, which only affects
    ranking among pathological clusters.
    """
    if graph.n != clusters.n:
        raise ValueError("graph and clusters cover different element counts")
    k_count = clusters.num_clusters
    y = clusters.assignment
    coo = graph.weights.tocoo()
    cross = y[coo.row] != y[coo.col]
    cut = np.bincount(
        y[coo.row][cross] - 1, weights=coo.data[cross], minlength=k_count
    )
    out_sums = graph.out_weight_sums()
    a = np.bincount(y - 1, weights=out_sums, minlength=k_count)
    a_bar = out_sums.sum() - a

    scores: dict[int, float] = {}
    for k in range(k_count):
        denom = min(a[k], a_bar[k])
        if denom <= 0.0:
            phi = 1.0 if cut[k] == 0.0 else 0.0
            log.info(
                "cluster %d has degenerate conductance denominator; phi set to %g",
                k + 1,
                phi,
            )
        else:
            phi = 1.0 - cut[k] / denom
            if phi < 0.0 or phi > 1.0:
                log.debug("clamping conductance %g of cluster %d into [0, 1]", phi, k + 1)
                phi = min(1.0, max(0.0, phi))
        scores[k + 1] = float(phi)
    return ClusterScores(scores=scores)


def product_clustering(a: ClusterAssignment, b: ClusterAssignment) -> ProductClustering:
    """Assign each element to the pair (a_i, b_i); non-empty pairs become
    dense product clusters, enumerated by ascending (a, b) id."""
    if a.n != b.n:
        raise ValueError("clusterings cover different element counts")
    pairs = sorted(set(zip(a.assignment.tolist(), b.assignment.tolist())))
    pair_to_dense = {pair: i + 1 for i, pair in enumerate(pairs)}
    assignment = np.array(
        [pair_to_dense[(int(ka), int(kb))] for ka, kb in zip(a.assignment, b.assignment)],
        dtype=np.int64,
    )
    parents = {i + 1: pair for i, pair in enumerate(pairs)}
    return ProductClustering(
        assignment=ClusterAssignment(assignment=assignment), parents=parents
    )


def combined_scores(
    product: ProductClustering, scores_a: ClusterScores, scores_b: ClusterScores
) -> ClusterScores:
    """Product-cluster score = mean of the two parent cluster scores."""
    out: dict[int, float] = {}
    for k, (ka, kb) in product.parents.items():
        if ka not in scores_a.scores or kb not in scores_b.scores:
            raise ValueError(f"missing parent score for product cluster {k} = ({ka}, {kb})")
        out[k] = (scores_a.scores[ka] + scores_b.scores[kb]) / 2.0
    return ClusterScores(scores=out)


def export_scores(scores: ClusterScores, path: str | Path) -> None:
    """CSV dump ``cluster,conductance`` ordered by cluster id."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster", "conductance"])
        for k in sorted(scores.scores):
            writer.writerow([k, repr(scores.scores[k])])
