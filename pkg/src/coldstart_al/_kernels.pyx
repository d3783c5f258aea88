# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernels: fused CSR loops for the sweep and the
edge-wise KL sum. Contract identical to ``_kernels_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()

DEF LOG_FLOOR = 1e-300


def propagation_sweep(
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] indices,
    const double[::1] data,
    const cnp.int64_t[::1] t_indptr,
    const cnp.int64_t[::1] t_indices,
    const double[::1] t_data,
    const double[::1] out_wsum,
    const double[::1] in_wsum,
    const double[::1] labeled,
    const double[:, ::1] r,
    double[:, ::1] p,
    double[:, ::1] q,
    double mu,
    double nu,
    double alpha,
):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t n_classes = p.shape[1]
    cdef Py_ssize_t i, c, e, j
    cdef double gamma, w, qv, m, tot, denom
    cdef double[::1] acc = np.empty(n_classes)

    # p update: reads q only
    for i in range(n):
        gamma = nu + mu * (out_wsum[i] + alpha)
        for c in range(n_classes):
            qv = q[i, c]
            if qv < LOG_FLOOR:
                qv = LOG_FLOOR
            acc[c] = alpha * log(qv)
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            w = data[e]
            for c in range(n_classes):
                qv = q[j, c]
                if qv < LOG_FLOOR:
                    qv = LOG_FLOOR
                acc[c] += w * log(qv)
        m = -INFINITY
        for c in range(n_classes):
            acc[c] = mu * acc[c] / gamma
            if acc[c] > m:
                m = acc[c]
        tot = 0.0
        for c in range(n_classes):
            acc[c] = exp(acc[c] - m)
            tot += acc[c]
        for c in range(n_classes):
            p[i, c] = acc[c] / tot

    # q update: reads the fully refreshed p
    for i in range(n):
        denom = labeled[i] + mu * (in_wsum[i] + alpha)
        if denom <= 0.0:
            continue  # keep previous q row: the closed form is 0/0 here
        for c in range(n_classes):
            acc[c] = r[i, c] + mu * alpha * p[i, c]
        for e in range(t_indptr[i], t_indptr[i + 1]):
            j = t_indices[e]
            w = t_data[e]
            for c in range(n_classes):
                acc[c] += mu * w * p[j, c]
        for c in range(n_classes):
            q[i, c] = acc[c] / denom


def edge_kl_sum(
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] indices,
    const double[::1] data,
    const double[:, ::1] p,
    const double[:, ::1] q,
):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t n_classes = p.shape[1]
    cdef Py_ssize_t i, c, e, j
    cdef double total = 0.0, kl, pv, qv

    for i in range(n):
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            kl = 0.0
            for c in range(n_classes):
                pv = p[i, c]
                if pv > 0.0:
                    qv = q[j, c]
                    if qv == 0.0:
                        return INFINITY
                    kl += pv * (log(pv) - log(qv))
            total += data[e] * kl
    return total
