"""Experiment runner: wires data, graphs, conductance, propagation, strategy
and oracle into full active-learning runs and measures minority-class recall.

A run proceeds per repeat from a cold start (zero labels): the first batch is
drawn from conductance-ranked clusters, every later batch from the configured
strategy's scores; the oracle answers each batch in full before the model
updates (batch-synchronous). Iterations stop at ``n_iter`` or once a quarter
of the dataset (by default) has been annotated, whichever comes first.

Per-iteration recall of the minority classes is the fraction of all
ground-truth minority elements already annotated. Curves are averaged
pointwise over repeats; per-repeat curves and full query traces are retained.
Everything is deterministic given the config and root seed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import labelprop, strategy as strat
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
from .labelprop import PropagationParams, PropagationState, init_state, propagate
from .oracle import SimulatedOracle
from .simgraph import (
    SimilarityGraph,
    SimilaritySpec,
    build_similarity,
    pairwise_distances,
    rescale_distances,
)
from .strategy import QueryBatch, StrategySpec

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class DatasetFilesSpec:
    vectors: str
    format: str = "csv"
    labels: str | None = None
    num_classes: int | None = None
    payloads: str | None = None


@dataclass
class ClusterSideSpec:
    """One clustering source: a file or a k-means run, optionally restricted
    to a column subspace for its conductance graph."""

    file: str | None = None
    kmeans_k: int | None = None
    kmeans_seed: int = 0
    columns: list[int] | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterSideSpec":
        if "file" in d:
            return cls(file=d["file"], columns=d.get("columns"))
        if "kmeans" in d:
            km = d["kmeans"]
            return cls(
                kmeans_k=int(km["k"]),
                kmeans_seed=int(km.get("seed", 0)),
                columns=d.get("columns"),
            )
        raise ValueError("cluster source needs 'file' or 'kmeans'")


@dataclass
class ExperimentConfig:
    similarity: SimilaritySpec
    propagation: PropagationParams
    strategy: StrategySpec
    minority_classes: tuple[int, ...]
    synthetic: SyntheticSpec | None = None
    files: DatasetFilesSpec | None = None
    cluster_sources: tuple[ClusterSideSpec, ...] = ()
    repeats: int = 5
    budget_fraction: float = 0.25
    output: str = "results"
    variants: tuple[str, ...] = ()

    def __post_init__(self):
        if (self.synthetic is None) == (self.files is None):
            raise ValueError("exactly one dataset source (synthetic or files) required")
        if len(self.cluster_sources) not in (1, 2):
            raise ValueError("need one cluster source, or two for product mode")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not 0.0 < self.budget_fraction <= 1.0:
            raise ValueError("budget_fraction must lie in (0, 1]")
        c = self.num_classes
        mc = tuple(sorted(set(int(m) for m in self.minority_classes)))
        if not mc or not all(1 <= m <= c for m in mc) or len(mc) >= c:
            raise ValueError("minority_classes must be a non-empty proper subset of 1..C")
        self.minority_classes = mc

    @property
    def num_classes(self) -> int:
        if self.synthetic is not None:
            return self.synthetic.num_classes
        if self.files.num_classes is None:
            raise ValueError("files dataset source needs num_classes")
        return self.files.num_classes

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        ds = d.get("dataset", {})
        synthetic = files = None
        if "synthetic" in ds:
            synthetic = SyntheticSpec.from_dict(ds["synthetic"])
        elif "files" in ds:
            f = ds["files"]
            files = DatasetFilesSpec(
                vectors=f["vectors"],
                format=f.get("format", "csv"),
                labels=f.get("labels"),
                num_classes=f.get("num_classes"),
                payloads=f.get("payloads"),
            )
        raw_clusters = d.get("clusters", {})
        if "product" in raw_clusters:
            sources = tuple(ClusterSideSpec.from_dict(s) for s in raw_clusters["product"])
        else:
            sources = (ClusterSideSpec.from_dict(raw_clusters),)
        return cls(
            similarity=SimilaritySpec.from_dict(d.get("similarity", {})),
            propagation=PropagationParams.from_dict(d.get("propagation", {})),
            strategy=StrategySpec.from_dict(d["strategy"]),
            minority_classes=tuple(d.get("minority_classes", ())),
            synthetic=synthetic,
            files=files,
            cluster_sources=sources,
            repeats=int(d.get("repeats", 5)),
            budget_fraction=float(d.get("budget_fraction", 0.25)),
            output=d.get("output", "results"),
            variants=tuple(d.get("variants", ())),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def variant_name(similarity: SimilaritySpec, strategy: StrategySpec) -> str:
    """Nomenclature e.g. NN-EOE-2: similarity, score, algorithm number."""
    if strategy.algorithm == "random":
        return "random"
    algo = "1" if strategy.algorithm == "cluster_ranking" else "2"
    return f"{similarity.variant}-{strategy.score}-{algo}"


def resolve_variant(name: str, config: ExperimentConfig) -> tuple[SimilaritySpec, StrategySpec]:
    """Derive per-variant specs from the config's base similarity/strategy."""
    base_sim, base_strat = config.similarity, config.strategy
    if name == "random":
        return base_sim, StrategySpec(
            algorithm="random",
            n_query=base_strat.n_query,
            n_pc=base_strat.n_pc,
            n_iter=base_strat.n_iter,
            seed=base_strat.seed,
        )
    parts = name.split("-")
    if len(parts) != 3 or parts[2] not in ("1", "2"):
        raise ValueError(f"cannot parse variant name {name!r}")
    sim = SimilaritySpec(
        variant=parts[0],
        knn_k=base_sim.knn_k,
        sigma_quantile=base_sim.sigma_quantile,
        rescale_by_dim=base_sim.rescale_by_dim,
    )
    algorithm = "cluster_ranking" if parts[2] == "1" else "element_ranking"
    return sim, StrategySpec(
        algorithm=algorithm,
        score=parts[1],
        n_query=base_strat.n_query,
        n_pc=base_strat.n_pc,
        n_iter=base_strat.n_iter,
        seed=base_strat.seed,
    )


# ---------------------------------------------------------------------------
# prepared inputs
# ---------------------------------------------------------------------------

@dataclass
class ExperimentInputs:
    """Everything derivable from the config before any labels exist."""

    dataset: EmbeddedDataset
    ground_truth: PartialLabels | None
    clusters: ClusterAssignment
    parent_clusters: tuple[ClusterAssignment, ...]
    distances: np.ndarray
    parent_distances: tuple[np.ndarray, ...]
    payloads: dict[str, str] | None = None
    _graphs: dict = field(default_factory=dict)
    _conductances: dict = field(default_factory=dict)

    def graph_for(self, sim: SimilaritySpec) -> SimilarityGraph:
        key = (sim.variant, sim.knn_k, sim.sigma_quantile)
        if key not in self._graphs:
            self._graphs[key] = build_similarity(
                self.dataset, self.clusters, sim, distances=self.distances
            )
        return self._graphs[key]

    def conductance_for(self, sim: SimilaritySpec) -> ClusterScores:
        """Initial cluster scores; in product mode, averages of the per-parent
        conductances computed on the parents' (subspace) graphs."""
        key = (sim.variant, sim.knn_k, sim.sigma_quantile)
        if key not in self._conductances:
            if len(self.parent_clusters) == 2:
                parent_scores = []
                for parent, dist in zip(self.parent_clusters, self.parent_distances):
                    g = build_similarity(self.dataset, parent, sim, distances=dist)
                    parent_scores.append(conductance(g, parent))
                product = product_clustering(*self.parent_clusters)
                self._conductances[key] = combined_scores(product, *parent_scores)
            else:
                self._conductances[key] = conductance(self.graph_for(sim), self.clusters)
        return self._conductances[key]


def _resolve_side(
    side: ClusterSideSpec, dataset: EmbeddedDataset, distances: np.ndarray
) -> tuple[ClusterAssignment, np.ndarray]:
    """Cluster assignment plus the distance table of the side's subspace."""
    if side.columns is not None:
        sub = EmbeddedDataset(ids=dataset.ids, vectors=dataset.vectors[:, side.columns])
        dist = rescale_distances(pairwise_distances(sub), sub.dims)
        source = sub
    else:
        dist = distances
        source = dataset
    if side.file is not None:
        return load_clusters(side.file, dataset), dist
    return kmeans_clusters(source, side.kmeans_k, seed=side.kmeans_seed), dist


def prepare_experiment(config: ExperimentConfig, require_truth: bool = True) -> ExperimentInputs:
    if config.synthetic is not None:
        dataset, truth = generate_synthetic(config.synthetic)
        payloads = None
    else:
        dataset = load_dataset(config.files.vectors, format=config.files.format)
        truth = None
        if config.files.labels:
            truth = load_labels(config.files.labels, dataset, config.num_classes)
        payloads = None
        if config.files.payloads:
            with open(config.files.payloads, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                next(reader, None)
                payloads = {rec[0]: rec[1] for rec in reader if rec}
    if require_truth and (truth is None or not truth.is_fully_labeled()):
        raise ValueError("simulation mode needs a fully labeled ground truth")

    distances = pairwise_distances(dataset)
    if config.similarity.rescale_by_dim:
        distances = rescale_distances(distances, dataset.dims)

    sides = [_resolve_side(s, dataset, distances) for s in config.cluster_sources]
    if len(sides) == 2:
        clusters = product_clustering(sides[0][0], sides[1][0]).assignment
    else:
        clusters = sides[0][0]
    return ExperimentInputs(
        dataset=dataset,
        ground_truth=truth,
        clusters=clusters,
        parent_clusters=tuple(s[0] for s in sides) if len(sides) == 2 else (),
        distances=distances,
        parent_distances=tuple(s[1] for s in sides) if len(sides) == 2 else (),
        payloads=payloads,
    )


# ---------------------------------------------------------------------------
# recall bookkeeping
# ---------------------------------------------------------------------------

def recall_at(labeled_so_far, minority_truth) -> float:
    """Fraction of ground-truth minority elements already annotated.

    ``labeled_so_far`` holds (index, label) pairs; ``minority_truth`` the
    indices of all minority elements.
    """
    minority = set(int(i) for i in minority_truth)
    if not minority:
        raise ValueError("minority_truth must be non-empty")
    hit = {int(i) for i, _ in labeled_so_far} & minority
    return len(hit) / len(minority)


def minority_indices(truth: PartialLabels, minority_classes) -> np.ndarray:
    return np.flatnonzero(np.isin(truth.labels, list(minority_classes)))


@dataclass
class RecallCurve:
    """Recall per iteration, starting at the cold-start origin (0, 0, 0)."""

    iterations: list[int]
    labeled_counts: list[int]
    values: list[float]

    def __post_init__(self):
        if not self.iterations or self.iterations[0] != 0:
            raise ValueError("curves start at iteration 0")
        if self.values[0] != 0.0:
            raise ValueError("cold start means recall 0 at iteration 0")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("recall must be non-decreasing")


def average_curves(curves: list[RecallCurve]) -> tuple[RecallCurve, list[float]]:
    """Pointwise mean curve plus the pointwise standard deviation."""
    lengths = {len(c.values) for c in curves}
    if len(lengths) != 1:
        raise ValueError("curves have different lengths; cannot average pointwise")
    values = np.array([c.values for c in curves])
    labeled = np.array([c.labeled_counts for c in curves])
    if not (labeled == labeled[0]).all():
        raise ValueError("labeled counts differ across repeats")
    mean = RecallCurve(
        iterations=list(curves[0].iterations),
        labeled_counts=list(curves[0].labeled_counts),
        values=[float(v) for v in values.mean(axis=0)],
    )
    return mean, [float(s) for s in values.std(axis=0)]


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------

def iteration_rng(seed: int, repeat: int, iteration: int) -> np.random.Generator:
    """Stateless per-iteration generator so that runs and replays coincide."""
    return np.random.default_rng(np.random.SeedSequence([seed, repeat, iteration]))


@dataclass
class LoopState:
    """One active-learning run in progress (also the service's core state)."""

    labels: PartialLabels
    model: PropagationState
    iteration: int = 0
    batches: list[QueryBatch] = field(default_factory=list)
    answered: list[tuple[int, int]] = field(default_factory=list)

    @property
    def labeled_count(self) -> int:
        return self.labels.num_labeled


def select_batch(
    loop: LoopState,
    spec: StrategySpec,
    clusters: ClusterAssignment,
    conduct: ClusterScores,
    rng: np.random.Generator,
) -> QueryBatch:
    """Next query batch for iteration ``loop.iteration + 1``."""
    t = loop.iteration + 1
    mask = loop.labels.labeled_mask
    if spec.algorithm == "random":
        return strat.next_batch_random(spec, mask, rng, t)
    if t == 1:
        return strat.initial_batch(clusters, conduct, spec, mask, rng, t)
    ent = labelprop.entropies(loop.model)
    if spec.algorithm == "cluster_ranking":
        scores = strat.cluster_scores_entropy(ent, clusters, conduct, spec.score)
        return strat.next_batch_cluster_ranking(scores, clusters, spec, mask, rng, t)
    scores = strat.element_scores_entropy(ent, clusters, conduct, spec.score, mask)
    return strat.next_batch_element_ranking(scores, spec, mask, t)


def apply_answers(
    loop: LoopState,
    batch: QueryBatch,
    answers,
    graph: SimilarityGraph,
    params: PropagationParams,
    update_model: bool = True,
) -> None:
    """Integrate oracle feedback and (for model-driven strategies) propagate."""
    pairs = [(a.index, a.label) for a in answers]
    loop.labels = loop.labels.with_answers(pairs)
    loop.answered.extend(pairs)
    loop.batches.append(batch)
    loop.iteration += 1
    if update_model:
        loop.model = propagate(loop.model, graph, params, loop.labels)


def run_single(
    inputs: ExperimentInputs,
    graph: SimilarityGraph,
    conduct: ClusterScores,
    sim: SimilaritySpec,
    spec: StrategySpec,
    config: ExperimentConfig,
    repeat: int,
    root_seed: int,
) -> tuple[RecallCurve, list[dict]]:
    n = inputs.dataset.n
    truth = inputs.ground_truth
    oracle = SimulatedOracle(truth)
    minority = set(int(i) for i in minority_indices(truth, config.minority_classes))
    if not minority:
        raise ValueError("ground truth contains no minority elements")
    budget = math.ceil(config.budget_fraction * n)
    update_model = spec.algorithm != "random"

    loop = LoopState(
        labels=PartialLabels(np.zeros(n, dtype=np.int64), config.num_classes),
        model=init_state(n, config.num_classes),
    )
    iterations, labeled_counts, values = [0], [0], [0.0]
    trace: list[dict] = []
    found = 0
    while loop.iteration < spec.n_iter and loop.labeled_count < budget:
        rng = iteration_rng(root_seed, repeat, loop.iteration + 1)
        batch = select_batch(loop, spec, inputs.clusters, conduct, rng)
        if len(batch) == 0:
            break
        answers = oracle.answer(batch)
        apply_answers(loop, batch, answers, graph, config.propagation, update_model)
        found += sum(1 for a in answers if a.index in minority)
        iterations.append(loop.iteration)
        labeled_counts.append(loop.labeled_count)
        values.append(found / len(minority))
        trace.append(
            {
                "iteration": loop.iteration,
                "indices": [int(i) for i in batch.indices],
                "labels": [int(a.label) for a in answers],
            }
        )
        if batch.exhausted:
            break
    return RecallCurve(iterations, labeled_counts, values), trace


@dataclass
class VariantResult:
    name: str
    mean_curve: RecallCurve
    std: list[float]
    repeat_curves: list[RecallCurve]
    traces: list[list[dict]]


@dataclass
class ExperimentResult:
    variants: dict[str, VariantResult]
    errors: dict[str, list[str]]

    @property
    def ok(self) -> bool:
        return not self.errors


def run_experiment(
    config: ExperimentConfig,
    variants: list[str] | None = None,
    root_seed: int | None = None,
) -> ExperimentResult:
    """Run every requested variant over ``config.repeats`` repeats."""
    inputs = prepare_experiment(config)
    if variants is None:
        variants = list(config.variants) or [variant_name(config.similarity, config.strategy)]
    seed = config.strategy.seed if root_seed is None else root_seed

    results: dict[str, VariantResult] = {}
    errors: dict[str, list[str]] = {}
    for name in variants:
        sim, spec = resolve_variant(name, config)
        try:
            graph = inputs.graph_for(sim)
            conduct = inputs.conductance_for(sim)
        except Exception as exc:  # noqa: BLE001 - variant isolation
            log.error("variant %s aborted during setup: %s", name, exc)
            errors.setdefault(name, []).append(f"setup: {exc}")
            continue
        curves, traces = [], []
        for rep in range(config.repeats):
            try:
                curve, trace = run_single(inputs, graph, conduct, sim, spec, config, rep, seed)
                curves.append(curve)
                traces.append(trace)
            except Exception as exc:  # noqa: BLE001 - repeat isolation
                log.error("variant %s repeat %d aborted: %s", name, rep, exc)
                errors.setdefault(name, []).append(f"repeat {rep}: {exc}")
        if curves:
            mean, std = average_curves(curves)
            results[name] = VariantResult(name, mean, std, curves, traces)
    return ExperimentResult(variants=results, errors=errors)


# ---------------------------------------------------------------------------
# result emission
# ---------------------------------------------------------------------------

RESULTS_HEADER = ["variant", "iteration", "labeled_count", "recall_mean", "recall_std"]

_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot recall curves from results.csv (written next to it).\"\"\"
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "results.csv"
series = defaultdict(lambda: ([], []))
with open(path) as fh:
    for row in csv.DictReader(fh):
        xs, ys = series[row["variant"]]
        xs.append(int(row["iteration"]))
        ys.append(float(row["recall_mean"]))
for name, (xs, ys) in series.items():
    plt.plot([0] + xs, [0.0] + ys, label=name)
plt.xlabel("iteration")
plt.ylabel("minority recall")
plt.legend()
plt.savefig("recall_curves.png", dpi=150)
print("wrote recall_curves.png")
"""


def emit_results(result: ExperimentResult, out_dir: str | Path, plot_script: bool = True):
    """Write ``results.csv`` (one row per variant and iteration >= 1),
    ``traces.json`` with raw curves and query traces, and optionally a
    standalone plotting script. Output is byte-deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.csv"
    with open(results_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for name, vr in result.variants.items():
            curve = vr.mean_curve
            for t in range(1, len(curve.iterations)):
                writer.writerow(
                    [
                        name,
                        curve.iterations[t],
                        curve.labeled_counts[t],
                        repr(curve.values[t]),
                        repr(vr.std[t]),
                    ]
                )
    traces_path = out / "traces.json"
    payload = {
        name: {
            "repeat_curves": [
                {
                    "iterations": c.iterations,
                    "labeled_counts": c.labeled_counts,
                    "values": c.values,
                }
                for c in vr.repeat_curves
            ],
            "traces": vr.traces,
        }
        for name, vr in result.variants.items()
    }
    with open(traces_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    written = [results_path, traces_path]
    if plot_script:
        script = out / "plot_results.py"
        script.write_text(_PLOT_SCRIPT, encoding="utf-8")
        written.append(script)
    return written


def load_results_csv(path: str | Path) -> dict[str, dict[str, list]]:
    """Parse a results.csv back into per-variant columns."""
    out: dict[str, dict[str, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cols = out.setdefault(
                row["variant"],
                {"iteration": [], "labeled_count": [], "recall_mean": [], "recall_std": []},
            )
            cols["iteration"].append(int(row["iteration"]))
            cols["labeled_count"].append(int(row["labeled_count"]))
            cols["recall_mean"].append(float(row["recall_mean"]))
            cols["recall_std"].append(float(row["recall_std"]))
    return out
