"""Pure-NumPy propagation kernels (fallback when the extension is absent).

Both backends implement exactly the same contract on raw CSR arrays; see
``kernels`` for dispatch. ``p``, ``q``, ``r`` are (n, C) float64 tables,
``labeled`` is a float64 0/1 vector, and the graph arrives as CSR triples for
the stored direction plus its transpose.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

LOG_FLOOR = 1e-300


def _csr(indptr, indices, data, n):
    return sparse.csr_matrix((data, indices, indptr), shape=(n, n))


def propagation_sweep(
    indptr,
    indices,
    data,
    t_indptr,
    t_indices,
    t_data,
    out_wsum,
    in_wsum,
    labeled,
    r,
    p,
    q,
    mu,
    nu,
    alpha,
):
    """One alternating-minimization sweep, in place: p from q, then q from p.

    p_i(c) ~ exp(mu * sum_j w'_ij log q_j(c) / gamma_i) with
    gamma_i = nu + mu * sum_j w'_ij, then
    q_i(c) = (r_i(c) + mu * sum_j w'_ji p_j(c)) / (1[i labeled] + mu * sum_j w'_ji),
    where w' carries the extra ``alpha`` on the diagonal. Rows whose q
    denominator vanishes (alpha == 0, no inflow, unlabeled) keep their
    previous q row.
    """
    n, _ = p.shape
    W = _csr(indptr, indices, data, n)
    WT = _csr(t_indptr, t_indices, t_data, n)

    logq = np.log(np.maximum(q, LOG_FLOOR))
    z = mu * (W @ logq + alpha * logq)
    z /= (nu + mu * (out_wsum + alpha))[:, None]
    z -= z.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    p[:] = z

    num = r + mu * (WT @ p + alpha * p)
    denom = labeled + mu * (in_wsum + alpha)
    ok = denom > 0.0
    q[ok] = num[ok] / denom[ok, None]


def edge_kl_sum(indptr, indices, data, p, q):
    """sum over stored edges of w_ij * KL(p_i || q_j).

    Returns +inf when some edge pairs p_i(c) > 0 with q_j(c) == 0; entries
    with p_i(c) == 0 contribute nothing (0 log 0 = 0).
    """
    n, _ = p.shape
    W = _csr(indptr, indices, data, n)
    with np.errstate(divide="ignore"):
        logq = np.log(q)
    qzero = q == 0.0
    if qzero.any():
        reached = (W @ qzero.astype(np.float64)) > 0.0
        if bool(np.any(reached & (p > 0.0))):
            return float("inf")
        logq = np.where(qzero, 0.0, logq)
    plogp = np.where(p > 0.0, p * np.log(np.maximum(p, LOG_FLOOR)), 0.0).sum(axis=1)
    wsum = np.asarray(W.sum(axis=1)).ravel()
    cross = float(np.sum(p * (W @ logq)))
    return float(np.dot(wsum, plogp) - cross)
