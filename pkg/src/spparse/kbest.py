"""k-best path extraction with Yen's algorithm on top of any path decoder.

A scorer provides ``decode(x, graph, start, prefix, banned)`` returning the
best :class:`Translation` that starts with the forced ``prefix`` and avoids the
banned ``(node, label)`` edges, and ``score(x, graph, labels, start)``.
Graphs are acyclic, so root paths never need node removal.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .automaton import EOS, ComponentGraph, SearchError, Translation, trace_back


class Scorer(Protocol):
    def decode(self, x, graph, start=None, prefix=(), banned=()) -> Translation: ...

    def score(self, x, graph, labels, start=None) -> float: ...


@dataclass(frozen=True)
class ConstrainedDecodeRequest:
    forced_prefix: tuple[str, ...]
    banned_edges: frozenset[tuple[int, str]]
    start: int

    def run(self, scorer: Scorer, x, graph) -> Translation:
        return scorer.decode(x, graph, self.start, self.forced_prefix, self.banned_edges)


@dataclass
class KBestList:
    items: list[Translation] = field(default_factory=list)
    k_requested: int = 1

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def label_lists(self) -> list[tuple[str, ...]]:
        return [t.labels for t in self.items]


class EdgeWeightScorer:
    """Static additive edge weights keyed by ``(node, label)``; input is ignored."""

    exact_on_trees = True

    def __init__(self, weights: dict[tuple[int, str], float]):
        self.weights = weights

    def decode(self, x, graph, start=None, prefix=(), banned=()) -> Translation:
        start = graph.source if start is None else start
        node = graph.walk(prefix, start)
        banned = set(banned)
        V = graph.node_count
        d = [math.inf] * V
        pi = [-1] * V
        d[node] = self._prefix_cost(graph, start, prefix)
        for u in range(node, V):
            if math.isinf(d[u]):
                continue
            for e in graph.out_edges(u):
                z = graph.label_vocab[graph.labels[e]]
                if (u, z) in banned:
                    continue
                v = int(graph.targets[e])
                score = d[u] + self.weights[(u, z)]
                if score < d[v] or (score == d[v] and pi[v] >= 0
                                    and graph.labels[e] < graph.labels[pi[v]]):
                    d[v] = score
                    pi[v] = e
        if math.isinf(d[graph.sink]):
            raise SearchError("sink unreachable")
        return Translation(tuple(prefix) + trace_back(graph, pi, node), d[graph.sink])

    def _prefix_cost(self, graph, start, labels) -> float:
        cost = 0.0
        u = start
        for z in labels:
            cost = cost + self.weights[(u, z)]
            u = graph.step(u, z)
        return cost

    def score(self, x, graph, labels, start=None) -> float:
        start = graph.source if start is None else start
        return self._prefix_cost(graph, start, list(labels) + [EOS])


def decode_k(x: Sequence[str], graph: ComponentGraph, scorer: Scorer, k: int,
             start: int | None = None, forced_prefix: Sequence[str] = ()) -> KBestList:
    """Up to ``k`` distinct paths from ``start`` in ascending score order.

    Every returned path begins with ``forced_prefix``. The list is shorter
    than ``k`` when the graph has fewer paths.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    start = graph.source if start is None else start
    forced_prefix = tuple(forced_prefix)
    try:
        best = ConstrainedDecodeRequest(forced_prefix, frozenset(), start).run(scorer, x, graph)
    except SearchError:
        return KBestList([], k)
    accepted = [best]
    seen = {best.labels}
    pool: list[tuple[float, tuple[str, ...], Translation]] = []
    while len(accepted) < k:
        last = accepted[-1].labels
        node = graph.walk(forced_prefix, start)
        for i in range(len(forced_prefix), len(last) + 1):
            root = last[:i]
            if i > len(forced_prefix):
                node = graph.step(node, last[i - 1])
            banned = set()
            for path in accepted:
                if path.labels[:i] == root:
                    banned.add((node, path.labels[i] if i < len(path.labels) else EOS))
            request = ConstrainedDecodeRequest(root, frozenset(banned), start)
            try:
                cand = request.run(scorer, x, graph)
            except SearchError:
                continue
            if cand.labels in seen:
                continue
            seen.add(cand.labels)
            heapq.heappush(pool, (cand.score, cand.labels, cand))
        if not pool:
            break
        accepted.append(heapq.heappop(pool)[2])
    accepted.sort(key=lambda t: (t.score, t.labels))
    return KBestList(accepted, k)

