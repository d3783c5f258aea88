"""Batch selection strategies.

Two algorithms plus a baseline:

- cluster ranking: rank clusters, draw a per-cluster quota of unlabeled
  elements from the best ones (conductance ranks the very first batch, an
  entropy-derived cluster score afterwards),
- element ranking: take the top unlabeled elements by per-element score,
- random: uniform sampling without replacement.

Scores come in entropy-only and conductance-weighted flavors at both
granularities (EOC/WEC per cluster, EOE/WEE per element). All ties break by
ascending id so that runs replay exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusterquality import ClusterScores
from .dataset import ClusterAssignment

ALGORITHMS = ("cluster_ranking", "element_ranking", "random")
CLUSTER_SCORES = ("EOC", "WEC")
ELEMENT_SCORES = ("EOE", "WEE")


@dataclass
class StrategySpec:
    algorithm: str
    score: str = "EOE"
    n_query: int = 50
    n_pc: int = 3
    n_iter: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.n_query < 1 or self.n_iter < 1 or self.n_pc < 1:
            raise ValueError("n_query, n_pc, n_iter must be >= 1")
        if self.algorithm == "cluster_ranking" and self.score not in CLUSTER_SCORES:
            raise ValueError(f"cluster_ranking needs a score in {CLUSTER_SCORES}")
        if self.algorithm == "element_ranking" and self.score not in ELEMENT_SCORES:
            raise ValueError(f"element_ranking needs a score in {ELEMENT_SCORES}")

    @classmethod
    def from_dict(cls, d: dict) -> "StrategySpec":
        return cls(
            algorithm=d["algorithm"],
            score=d.get("score", "EOE"),
            n_query=int(d.get("n_query", 50)),
            n_pc=int(d.get("n_pc", 3)),
            n_iter=int(d.get("n_iter", 50)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class QueryBatch:
    """Elements chosen in one iteration, with their selection-time scores."""

    indices: np.ndarray
    iteration: int
    scores: np.ndarray = field(default=None)  # type: ignore[assignment]
    exhausted: bool = False

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.scores is None:
            self.scores = np.zeros(len(self.indices))
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if len(set(self.indices.tolist())) != len(self.indices):
            raise ValueError("batch contains duplicate elements")

    def __len__(self) -> int:
        return len(self.indices)


def _sample_by_cluster_rank(
    ranked: list[int],
    cluster_scores: ClusterScores,
    clusters: ClusterAssignment,
    n_query: int,
    n_pc: int,
    labeled_mask: np.ndarray,
    rng: np.random.Generator,
    iteration: int,
) -> QueryBatch:
    """Walk clusters by rank, drawing up to n_pc unlabeled elements from each.

    The quota of the last visited cluster is truncated to hit n_query
    exactly; clusters that run short are compensated further down the
    ranking. The batch only falls short when the unlabeled pool does.
    """
    chosen: list[np.ndarray] = []
    scores: list[np.ndarray] = []
    remaining = n_query
    for k in ranked:
        if remaining == 0:
            break
        pool = clusters.members[k]
        pool = pool[~labeled_mask[pool]]
        if len(pool) == 0:
            continue
        take = min(n_pc, remaining, len(pool))
        picked = rng.choice(pool, size=take, replace=False)
        chosen.append(np.sort(picked))
        scores.append(np.full(take, cluster_scores.scores[k]))
        remaining -= take
    indices = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    got = np.concatenate(scores) if scores else np.empty(0)
    return QueryBatch(
        indices=indices, iteration=iteration, scores=got, exhausted=remaining > 0
    )


def initial_batch(
    clusters: ClusterAssignment,
    cluster_scores: ClusterScores,
    spec: StrategySpec,
    labeled_mask: np.ndarray,
    rng: np.random.Generator,
    iteration: int = 1,
) -> QueryBatch:
    """Cold-start batch: clusters ranked by conductance."""
    return _sample_by_cluster_rank(
        cluster_scores.ranked(),
        cluster_scores,
        clusters,
        spec.n_query,
        spec.n_pc,
        labeled_mask,
        rng,
        iteration,
    )


def cluster_scores_entropy(
    entropies: np.ndarray,
    clusters: ClusterAssignment,
    conductances: ClusterScores,
    score: str,
) -> ClusterScores:
    """EOC: mean member entropy per cluster; WEC: conductance-weighted EOC."""
    if score not in CLUSTER_SCORES:
        raise ValueError(f"score must be one of {CLUSTER_SCORES}")
    out: dict[int, float] = {}
    for k, members in clusters.members.items():
        if len(members) == 0:
            raise ValueError(f"cluster {k} is empty")
        eoc = float(entropies[members].mean())
        out[k] = eoc if score == "EOC" else conductances.scores[k] * eoc
    return ClusterScores(scores=out)


def element_scores_entropy(
    entropies: np.ndarray,
    clusters: ClusterAssignment,
    conductances: ClusterScores,
    score: str,
    labeled_mask: np.ndarray,
) -> np.ndarray:
    """EOE: the entropy vector itself; WEE: entropy times the element's
    cluster conductance. Labeled entries are set to -inf (excluded)."""
    if score not in ELEMENT_SCORES:
        raise ValueError(f"score must be one of {ELEMENT_SCORES}")
    values = np.asarray(entropies, dtype=np.float64).copy()
    if score == "WEE":
        phi = conductances.as_array(clusters.num_clusters)
        values *= phi[clusters.assignment - 1]
    values[labeled_mask] = -np.inf
    return values


def next_batch_cluster_ranking(
    scores: ClusterScores,
    clusters: ClusterAssignment,
    spec: StrategySpec,
    labeled_mask: np.ndarray,
    rng: np.random.Generator,
    iteration: int,
) -> QueryBatch:
    """Same sampling scheme as the initial batch, ranked by EOC/WEC."""
    return _sample_by_cluster_rank(
        scores.ranked(),
        scores,
        clusters,
        spec.n_query,
        spec.n_pc,
        labeled_mask,
        rng,
        iteration,
    )


def next_batch_element_ranking(
    scores: np.ndarray,
    spec: StrategySpec,
    labeled_mask: np.ndarray,
    iteration: int,
) -> QueryBatch:
    """Top n_query unlabeled elements by score, ties by ascending index."""
    n = len(scores)
    order = np.lexsort((np.arange(n), -scores))
    order = order[~labeled_mask[order]]
    picked = order[: spec.n_query]
    return QueryBatch(
        indices=picked,
        iteration=iteration,
        scores=scores[picked],
        exhausted=len(picked) < spec.n_query,
    )


def next_batch_random(
    spec: StrategySpec,
    labeled_mask: np.ndarray,
    rng: np.random.Generator,
    iteration: int,
) -> QueryBatch:
    """Uniform sample without replacement from the unlabeled pool."""
    pool = np.flatnonzero(~labeled_mask)
    take = min(spec.n_query, len(pool))
    picked = np.sort(rng.choice(pool, size=take, replace=False)) if take else pool[:0]
    return QueryBatch(
        indices=picked, iteration=iteration, exhausted=take < spec.n_query
    )
