"""Shortest-path decoding with running lexical translation sums.

Each node keeps, for its best incoming path, the per-source-word sums
``sum_z p_t(x_i|z)`` over the path labels. An edge ``(u, v, z)`` scores
``-sum_i log(p_t(x_i|z) + s[u, i])``, i.e. the full path score with the
alignment normalizer dropped. EOS edges contribute nothing to the sums.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .automaton import (EOS, ComponentGraph, GraphError, SearchError, Translation,
                        banned_mask, trace_back)
from .lexical_model import TranslationTable


def label_probs(graph: ComponentGraph, table: TranslationTable,
                x: Sequence[str]) -> np.ndarray:
    """Dense ``|labels| x |x|`` matrix of p_t(x_i|z); the EOS row is zero."""
    probs = np.full((len(graph.label_vocab), len(x)), table.floor)
    index = table.by_generated
    for i, xi in enumerate(x):
        for z, p in index.get(xi, {}).items():
            lid = graph.label_id.get(z)
            if lid is not None:
                probs[lid, i] = p
    probs[graph.label_id[EOS]] = 0.0
    return probs


def null_sums(table: TranslationTable, x: Sequence[str]) -> list[float]:
    return [table.lookup(xi, table.null_token) for xi in x]


def _accumulate(x, labels, table, use_null):
    sums = null_sums(table, x) if use_null else [0.0] * len(x)
    for z in labels:
        sums = [table.lookup(xi, z) + s for xi, s in zip(x, sums)]
    return sums


def _neg_log(sums) -> float:
    score = 0.0
    for v in sums:
        score -= math.log(v)
    return score


def score_path(x: Sequence[str], labels: Sequence[str], table: TranslationTable,
               use_null: bool = True) -> float:
    """``-log prod_j sum_{z in labels} p_t(x_j|z)`` (plus the NULL term).

    Accumulates in the same order as the decoder, so a decoded path rescored
    here reproduces the decoder's score exactly.
    """
    return _neg_log(_accumulate(x, labels, table, use_null))


def decode_lexical(x: Sequence[str], graph: ComponentGraph, table: TranslationTable,
                   start: int | None = None, *, prefix: Sequence[str] = (),
                   banned: Iterable[tuple[int, str]] = (), use_null: bool = True,
                   init_score: float = 0.0, backend: str | None = None) -> Translation:
    """Best path from ``start`` (after following ``prefix``) to the sink.

    ``prefix`` labels are forced and their p_t terms seed the running sums;
    ``banned`` removes ``(node, label)`` edges from the search. The returned
    labels include the prefix.
    """
    if not x:
        raise ValueError("empty input")
    start = graph.source if start is None else start
    if not 0 <= start < graph.node_count:
        raise GraphError(f"start node {start} not in graph")
    node = graph.walk(prefix, start)
    if node is None:
        raise GraphError(f"prefix {' '.join(prefix)!r} is not a path from node {start}")
    probs = label_probs(graph, table, x)
    sums = np.zeros(len(x))
    if use_null:
        sums[:] = null_sums(table, x)
    for z in prefix:
        sums = probs[graph.label_id[z]] + sums
    d, pi, _, visited, relaxed = kernels.lexical_sssp(
        graph.indptr, graph.targets, graph.labels, probs, sums, node,
        float(init_score), banned_mask(graph, list(banned)), backend=backend)
    if not np.isfinite(d[graph.sink]):
        raise SearchError("no finite-score path reaches the sink")
    labels = tuple(prefix) + trace_back(graph, pi, node)
    return Translation(labels, float(d[graph.sink]), None,
                       {"visited_nodes": visited, "relaxed_edges": relaxed})


class LexicalScorer:
    """Adapter used by the k-best search."""

    exact_on_trees = True

    def __init__(self, table: TranslationTable, use_null: bool = True,
                 backend: str | None = None):
        self.table = table
        self.use_null = use_null
        self.backend = backend

    def decode(self, x, graph, start=None, prefix=(), banned=()) -> Translation:
        return decode_lexical(x, graph, self.table, start, prefix=prefix, banned=banned,
                              use_null=self.use_null, backend=self.backend)

    def score(self, x, graph, labels, start=None) -> float:
        return score_path(x, labels, self.table, self.use_null)
