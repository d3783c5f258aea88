"""Cold-start active learning for imbalanced labeling.

Ranks unlabeled elements by the entropy of a graph label-propagation model,
seeds the first batch from cluster conductance, queries an oracle in batches,
and tracks minority-class recall per iteration.
"""

from .clusterquality import ClusterScores, combined_scores, conductance, product_clustering
from .dataset import (
    ClusterAssignment,
    EmbeddedDataset,
    PartialLabels,
    SyntheticSpec,
    generate_synthetic,
    kmeans_clusters,
    load_clusters,
    load_dataset,
    load_labels,
)
from .harness import ExperimentConfig, RecallCurve, emit_results, recall_at, run_experiment
from .kernels import backend_name
from .labelprop import (
    PropagationParams,
    PropagationState,
    entropies,
    init_state,
    objective,
    propagate,
    set_labels,
)
from .oracle import AnnotationQueue, OracleAnswer, SimulatedOracle, simulated_answer
from .simgraph import (
    SimilarityGraph,
    SimilaritySpec,
    build_similarity,
    pairwise_distances,
    rescale_distances,
)
from .strategy import QueryBatch, StrategySpec

__version__ = "0.1.0"

__all__ = [
    "AnnotationQueue",
    "ClusterAssignment",
    "ClusterScores",
    "EmbeddedDataset",
    "ExperimentConfig",
    "OracleAnswer",
    "PartialLabels",
    "PropagationParams",
    "PropagationState",
    "QueryBatch",
    "RecallCurve",
    "SimilarityGraph",
    "SimilaritySpec",
    "SimulatedOracle",
    "StrategySpec",
    "SyntheticSpec",
    "backend_name",
    "build_similarity",
    "combined_scores",
    "conductance",
    "emit_results",
    "entropies",
    "generate_synthetic",
    "init_state",
    "kmeans_clusters",
    "load_clusters",
    "load_dataset",
    "load_labels",
    "objective",
    "pairwise_distances",
    "product_clustering",
    "propagate",
    "recall_at",
    "rescale_distances",
    "run_experiment",
    "set_labels",
    "simulated_answer",
]
