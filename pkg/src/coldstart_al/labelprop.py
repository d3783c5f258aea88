"""Soft-supervised label propagation over a similarity graph.

Every element carries two class distributions, ``p`` and ``q``, coupled by a
convex objective:

    sum_{i labeled} KL(r_i || q_i)
    + mu * sum_ij w'_ij KL(p_i || q_j)
    - nu * sum_i H(p_i)

with ``w'`` the edge weights plus ``alpha`` on the diagonal, ``r_i`` the
one-hot distribution of a labeled element, and natural logarithms throughout.
The term weighted by ``mu`` pulls neighbors toward agreement, the label term
anchors annotated elements, and the entropy reward makes "no information"
resolve to the uniform row.

Minimization alternates two closed-form updates per sweep (p from the current
q, then q from the new p; both exact coordinate minimizers, so the objective
never increases). At convergence the two tables coincide, and the per-element
entropies H(p_i) are the uncertainty signal consumed by the selection
strategies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataset import PartialLabels
from .simgraph import SimilarityGraph

log = logging.getLogger(__name__)


@dataclass
class PropagationParams:
    """Hyper-parameters; the defaults follow the source recommendation."""

    mu: float = 1e-3
    nu: float = 1e-3
    alpha: float = 2.0
    max_iters: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0 or self.alpha < 0:
            raise ValueError("mu, nu, alpha must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "PropagationParams":
        return cls(
            mu=float(d.get("mu", 1e-3)),
            nu=float(d.get("nu", 1e-3)),
            alpha=float(d.get("alpha", 2.0)),
            max_iters=int(d.get("max_iters", 500)),
            tol=float(d.get("tol", 1e-6)),
        )


@dataclass
class ProbTables:
    """Row-stochastic p and q plus one-hot r rows for labeled elements."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray


@dataclass
class PropagationState:
    tables: ProbTables
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False
    iters_run: int = 0

    @property
    def p(self) -> np.ndarray:
        return self.tables.p

    @property
    def q(self) -> np.ndarray:
        return self.tables.q

    @property
    def n(self) -> int:
        return self.tables.p.shape[0]

    @property
    def num_classes(self) -> int:
        return self.tables.p.shape[1]


def init_state(n: int, num_classes: int) -> PropagationState:
    """Maximum-entropy start: every p and q row uniform."""
    if n < 1 or num_classes < 2:
        raise ValueError("need n >= 1 and num_classes >= 2")
    uniform = np.full((n, num_classes), 1.0 / num_classes)
    return PropagationState(
        tables=ProbTables(p=uniform.copy(), q=uniform.copy(), r=np.zeros((n, num_classes)))
    )


def set_labels(state: PropagationState, labels: PartialLabels) -> PropagationState:
    """Rebuild the one-hot r table; p and q are kept (warm start)."""
    if labels.n != state.n:
        raise ValueError("labels cover a different element count")
    if labels.num_classes != state.num_classes:
        raise ValueError("labels declare a different class count")
    r = np.zeros_like(state.tables.r)
    idx = labels.labeled_indices
    r[idx, labels.labels[idx] - 1] = 1.0
    state.tables.r = r
    return state


def entropies(state: PropagationState) -> np.ndarray:
    """H(p_i) per element, each in [0, ln C]."""
    return row_entropies(state.p)


def row_entropies(p: np.ndarray) -> np.ndarray:
    out = np.where(p > 0.0, p * np.log(np.maximum(p, 1e-300)), 0.0)
    return -out.sum(axis=1)


def _row_kl(p: np.ndarray, q: np.ndarray) -> float:
    """sum_i KL(p_i || q_i), +inf when p > 0 meets q == 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * (np.log(np.maximum(p, 1e-300)) - np.log(q)), 0.0)
    return float(terms.sum())


def _prepared(graph: SimilarityGraph):
    """CSR triples for both directions plus weight sums, cached on the graph."""
    if graph._prepared is None:
        w = graph.weights
        wt = w.T.tocsr()
        wt.sort_indices()
        graph._prepared = (
            w.indptr.astype(np.int64),
            w.indices.astype(np.int64),
            np.ascontiguousarray(w.data, dtype=np.float64),
            wt.indptr.astype(np.int64),
            wt.indices.astype(np.int64),
            np.ascontiguousarray(wt.data, dtype=np.float64),
            graph.out_weight_sums(),
            graph.in_weight_sums(),
        )
    return graph._prepared


def objective(state: PropagationState, graph: SimilarityGraph, params: PropagationParams) -> float:
    """Evaluate the propagation objective at the current tables.

    A +inf value (a zero q entry facing positive probability mass) is
    representable and logged as a diagnostic.
    """
    p, q, r = state.tables.p, state.tables.q, state.tables.r
    indptr, indices, data, *_ = _prepared(graph)

    mask = r > 0.0
    with np.errstate(divide="ignore"):
        label_term = float(-np.log(q[mask]).sum())
    pair_term = kernels.edge_kl_sum(indptr, indices, data, p, q) + params.alpha * _row_kl(p, q)
    entropy_term = float(row_entropies(p).sum())
    value = label_term + params.mu * pair_term - params.nu * entropy_term
    if not np.isfinite(value):
        log.warning("objective is not finite (q has zero entries facing positive mass)")
    return value


def propagate(
    state: PropagationState,
    graph: SimilarityGraph,
    params: PropagationParams,
    labels: PartialLabels,
) -> PropagationState:
    """Alternate the closed-form updates until the tables stop moving.

    Convergence is declared when the largest row-wise total-variation change
    of p and q over one sweep drops below ``params.tol``. The objective value
    is recorded before the first sweep and after every sweep.
    """
    if graph.n != state.n:
        raise ValueError("graph covers a different element count")
    set_labels(state, labels)
    prep = _prepared(graph)
    labeled = (labels.labels > 0).astype(np.float64)
    p, q, r = state.tables.p, state.tables.q, state.tables.r

    trace = [objective(state, graph, params)]
    converged = False
    iters = 0
    for iters in range(1, params.max_iters + 1):
        p_prev = p.copy()
        q_prev = q.copy()
        kernels.propagation_sweep(
            *prep, labeled, r, p, q, params.mu, params.nu, params.alpha
        )
        if not np.isfinite(p).all() or not np.isfinite(q).all():
            bad = ~(np.isfinite(p).all(axis=1) & np.isfinite(q).all(axis=1))
            raise RuntimeError(
                f"non-finite propagation values at row {int(np.flatnonzero(bad)[0])}"
            )
        change = max(
            float(np.abs(p - p_prev).sum(axis=1).max()) / 2.0,
            float(np.abs(q - q_prev).sum(axis=1).max()) / 2.0,
        )
        trace.append(objective(state, graph, params))
        if change < params.tol:
            converged = True
            break

    state.objective_trace = trace
    state.converged = converged
    state.iters_run = iters
    return state


def dump_distributions(state: PropagationState, ids: list[str], path) -> None:
    """CSV dump ``id,p_1..p_C`` of the current p table."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"p_{c}" for c in range(1, state.num_classes + 1)])
        for i, eid in enumerate(ids):
            writer.writerow([eid] + [repr(float(v)) for v in state.p[i]])
