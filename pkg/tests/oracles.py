"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive (straight loops, generic solvers) and
must stay independent of the code paths under test.
"""

from __future__ import annotations

import math

import numpy as np


def brute_conductance(w_dense: np.ndarray, assignment: np.ndarray) -> dict[int, float]:
    """Triple-loop conductance per cluster: 1 - cut / min(a, a_bar)."""
    n = w_dense.shape[0]
    scores = {}
    for k in sorted(set(int(c) for c in assignment)):
        cut = 0.0
        a = 0.0
        a_bar = 0.0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                w = w_dense[i, j]
                if assignment[i] == k:
                    a += w
                    if assignment[j] != k:
                        cut += w
                else:
                    a_bar += w
        denom = min(a, a_bar)
        if denom <= 0.0:
            scores[k] = 1.0 if cut == 0.0 else 0.0
        else:
            scores[k] = 1.0 - cut / denom
    return scores


def naive_objective(
    p: np.ndarray,
    q: np.ndarray,
    labels: np.ndarray,
    w_dense: np.ndarray,
    mu: float,
    nu: float,
    alpha: float,
) -> float:
    """Straight-loop evaluation of the propagation objective."""
    n, C = p.shape

    def kl(a, b):
        total = 0.0
        for c in range(C):
            if a[c] > 0.0:
                if b[c] == 0.0:
                    return math.inf
                total += a[c] * (math.log(a[c]) - math.log(b[c]))
        return total

    def entropy(a):
        return -sum(a[c] * math.log(a[c]) for c in range(C) if a[c] > 0.0)

    total = 0.0
    for i in range(n):
        if labels[i] > 0:
            r = np.zeros(C)
            r[labels[i] - 1] = 1.0
            total += kl(r, q[i])
    for i in range(n):
        for j in range(n):
            w = w_dense[i, j] + (alpha if i == j else 0.0)
            if w > 0.0:
                total += mu * w * kl(p[i], q[j])
    for i in range(n):
        total -= nu * entropy(p[i])
    return total


def cvxpy_optimum(w_dense: np.ndarray, labels: np.ndarray, num_classes: int,
                  mu: float, nu: float, alpha: float):
    """Generic convex minimization of the propagation objective over (p, q)."""
    import cvxpy as cp

    n = w_dense.shape[0]
    w_prime = w_dense + alpha * np.eye(n)
    p = cp.Variable((n, num_classes), nonneg=True)
    q = cp.Variable((n, num_classes), nonneg=True)
    terms = []
    for i in range(n):
        if labels[i] > 0:
            terms.append(-cp.log(q[i, labels[i] - 1]))
        for j in range(n):
            w = w_prime[i, j]
            if w > 0.0:
                terms.append(mu * w * cp.sum(cp.kl_div(p[i], q[j])))
        terms.append(-nu * cp.sum(cp.entr(p[i])))
    problem = cp.Problem(
        cp.Minimize(cp.sum(cp.hstack(terms))),
        [cp.sum(p, axis=1) == 1, cp.sum(q, axis=1) == 1],
    )
    problem.solve(solver=cp.CLARABEL)
    return p.value, q.value, problem.value


def brute_knn(distances: np.ndarray, k: int) -> list[list[int]]:
    """Exhaustive k-nearest selection per row, ties by smaller index."""
    n = distances.shape[0]
    out = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        others.sort(key=lambda j: (distances[i, j], j))
        out.append(others[:k])
    return out


def random_symmetric_graph(rng: np.random.Generator, n: int, density: float = 0.4):
    """Random symmetric weight matrix in [0, 1], zero diagonal."""
    w = rng.random((n, n))
    keep = rng.random((n, n)) < density
    w = np.where(keep, w, 0.0)
    w = np.triu(w, 1)
    return w + w.T


def hypergeometric_recall(n: int, minority: int, budget: int):
    """Mean and variance of minority recall under uniform sampling w/o
    replacement of ``budget`` elements."""
    mean_hits = budget * minority / n
    var_hits = (
        budget * (minority / n) * (1 - minority / n) * (n - budget) / (n - 1)
    )
    return mean_hits / minority, var_hits / minority**2
