# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled relaxation loop for lexical shortest-path decoding."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY

cnp.import_array()


def lexical_sssp(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] targets, const cnp.int64_t[::1] labels,
                 const double[:, ::1] probs, const double[::1] init_sums,
                 Py_ssize_t start, double init_score, const unsigned char[::1] banned):
    """Relax all edges reachable from ``start`` in topological order.

    Returns ``(d, pi_edge, sums, visited_nodes, relaxed_edges)``.
    """
    cdef Py_ssize_t V = indptr.shape[0] - 1
    cdef Py_ssize_t n = probs.shape[1]
    cdef Py_ssize_t u, e, v, i
    cdef cnp.int64_t z
    cdef double score
    cdef long visited = 0, relaxed = 0
    cdef bint use_banned = banned.shape[0] > 0

    d_arr = np.full(V, np.inf)
    pi_arr = np.full(V, -1, dtype=np.int64)
    s_arr = np.zeros((V, n))
    cdef double[::1] d = d_arr
    cdef cnp.int64_t[::1] pi = pi_arr
    cdef double[:, ::1] s = s_arr

    d[start] = init_score
    for i in range(n):
        s[start, i] = init_sums[i]
    for u in range(start, V):
        if d[u] == INFINITY:
            continue
        visited += 1
        for e in range(indptr[u], indptr[u + 1]):
            if use_banned and banned[e]:
                continue
            relaxed += 1
            z = labels[e]
            v = targets[e]
            score = init_score
            for i in range(n):
                score -= log(probs[z, i] + s[u, i])
            if score < d[v] or (score == d[v] and pi[v] >= 0 and z < labels[pi[v]]):
                d[v] = score
                pi[v] = e
                for i in range(n):
                    s[v, i] = probs[z, i] + s[u, i]
    return d_arr, pi_arr, s_arr, visited, relaxed
