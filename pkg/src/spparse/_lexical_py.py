"""Pure-Python relaxation loop; mirrors ``_lexical_kernel`` operation for operation."""

import math

import numpy as np


def lexical_sssp(indptr, targets, labels, probs, init_sums, start, init_score, banned):
    V = len(indptr) - 1
    n = probs.shape[1]
    indptr = indptr.tolist()
    targets = targets.tolist()
    labels = labels.tolist()
    rows = probs.tolist()
    banned = banned.tolist() if len(banned) else None
    log = math.log
    inf = math.inf

    d = [inf] * V
    pi = [-1] * V
    s = [None] * V
    d[start] = init_score
    s[start] = [float(x) for x in init_sums]
    visited = relaxed = 0
    for u in range(start, V):
        if d[u] == inf:
            continue
        visited += 1
        su = s[u]
        for e in range(indptr[u], indptr[u + 1]):
            if banned is not None and banned[e]:
                continue
            relaxed += 1
            z = labels[e]
            v = targets[e]
            pz = rows[z]
            score = init_score
            for i in range(n):
                score -= log(pz[i] + su[i])
            if score < d[v] or (score == d[v] and pi[v] >= 0 and z < labels[pi[v]]):
                d[v] = score
                pi[v] = e
                s[v] = [pz[i] + su[i] for i in range(n)]
    sums = np.zeros((V, n))
    for v in range(V):
        if s[v] is not None:
            sums[v] = s[v]
    return np.array(d), np.array(pi, dtype=np.int64), sums, visited, relaxed
