"""Minimal deterministic acyclic automata over component tokens.

Every accepted sequence is followed by a reserved ``</s>`` edge into a single
sink, so the sink is always the last node in topological order. Node ids are
assigned in topological order when the graph is frozen (source is 0).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .corpus import is_language_token

EOS = "</s>"


class GraphError(ValueError):
    pass


def label_key(label: str):
    """Sort key for edge labels: EOS first, then plain string order."""
    return (label != EOS, label)


class ComponentGraph:
    """Frozen DAFSA stored as CSR adjacency sorted by label.

    ``labels`` holds, per edge, an index into ``label_vocab``; label ids are
    label ranks, so comparing ids compares labels.
    """

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int, str]]):
        edges = list(edges)
        vocab = sorted({z for _, _, z in edges} | {EOS}, key=label_key)
        self.label_vocab: tuple[str, ...] = tuple(vocab)
        self.label_id = {z: i for i, z in enumerate(vocab)}
        self.node_count = node_count
        self.source = 0
        self.sink = node_count - 1
        edges.sort(key=lambda e: (e[0], self.label_id[e[2]], e[1]))
        src = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
        self.targets = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
        self.labels = np.fromiter((self.label_id[e[2]] for e in edges),
                                  dtype=np.int64, count=len(edges))
        self.edge_sources = src
        self.indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.add.at(self.indptr, src + 1, 1)
        np.cumsum(self.indptr, out=self.indptr)
        self._check()
        self._lang_starts = {self.label_vocab[self.labels[e]]: int(self.targets[e])
                             for e in self.out_edges(self.source)}

    def _check(self):
        if self.node_count < 2:
            raise GraphError("graph needs at least a source and a sink")
        for u in range(self.node_count):
            lo, hi = self.indptr[u], self.indptr[u + 1]
            if u == self.sink:
                if hi > lo:
                    raise GraphError("sink has outgoing edges")
                continue
            if hi == lo:
                raise GraphError(f"node {u} is a dead end")
            if np.any(self.targets[lo:hi] <= u):
                raise GraphError("node ids are not in topological order")
            if np.any(np.diff(self.labels[lo:hi]) == 0):
                raise GraphError(f"node {u} is not deterministic")
        eos = self.label_id[EOS]
        into_sink = self.targets == self.sink
        if np.any(into_sink != (self.labels == eos)):
            raise GraphError("EOS edges must lead to the sink and only there")

    # -- queries --------------------------------------------------------------

    @property
    def edge_count(self) -> int:
        return len(self.targets)

    @property
    def topo_order(self) -> range:
        return range(self.node_count)

    @property
    def edges(self) -> Iterator[tuple[int, int, str]]:
        for u in range(self.node_count):
            for e in self.out_edges(u):
                yield u, int(self.targets[e]), self.label_vocab[self.labels[e]]

    def out_edges(self, u: int) -> range:
        return range(self.indptr[u], self.indptr[u + 1])

    def adjacency(self, u: int) -> list[tuple[int, str]]:
        return [(int(self.targets[e]), self.label_vocab[self.labels[e]])
                for e in self.out_edges(u)]

    def step(self, u: int, label: str) -> int | None:
        lid = self.label_id.get(label)
        if lid is None:
            return None
        lo, hi = self.indptr[u], self.indptr[u + 1]
        k = lo + np.searchsorted(self.labels[lo:hi], lid)
        if k < hi and self.labels[k] == lid:
            return int(self.targets[k])
        return None

    def walk(self, labels: Sequence[str], start: int | None = None) -> int | None:
        u = self.source if start is None else start
        for z in labels:
            u = self.step(u, z)
            if u is None:
                return None
        return u

    def accepts(self, labels: Sequence[str], start: int | None = None) -> bool:
        u = self.walk(labels, start)
        return u is not None and self.step(u, EOS) == self.sink

    @property
    def language_tokens(self) -> list[str]:
        return sorted(z for z in self._lang_starts if is_language_token(z))

    def language_start(self, language_token: str | None) -> int:
        """Start node for monolingual decoding, or the source when no token is given."""
        if language_token is None:
            return self.source
        if language_token not in self._lang_starts or not is_language_token(language_token):
            raise GraphError(f"unknown language token {language_token!r}; available: "
                             f"{', '.join(self.language_tokens) or 'none'}")
        return self._lang_starts[language_token]

    def count_paths(self, start: int | None = None) -> int:
        counts = [0] * self.node_count
        counts[self.sink] = 1
        for u in range(self.sink - 1, -1, -1):
            counts[u] = sum(counts[self.targets[e]] for e in self.out_edges(u))
        return counts[self.source if start is None else start]

    def iter_paths(self, start: int | None = None) -> Iterator[tuple[str, ...]]:
        """Accepted label sequences in lexicographic order (EOS stripped)."""
        eos = self.label_id[EOS]
        stack = [(self.source if start is None else start, ())]
        while stack:
            u, prefix = stack.pop()
            if u == -1:
                yield prefix
                continue
            for e in reversed(self.out_edges(u)):
                lid = self.labels[e]
                if lid == eos:
                    stack.append((-1, prefix))
                else:
                    stack.append((int(self.targets[e]), prefix + (self.label_vocab[lid],)))

    def enumerate_paths(self, limit: int | None = None,
                        start: int | None = None) -> list[tuple[str, ...]]:
        if limit is not None and limit < 1:
            raise ValueError("limit must be >= 1")
        out = []
        for p in self.iter_paths(start):
            out.append(p)
            if limit is not None and len(out) >= limit:
                break
        return out

    def path_to(self, node: int) -> tuple[str, ...]:
        """Some label path from the source to ``node`` (the lexicographically first)."""
        if node == self.source:
            return ()
        stack = [(self.source, ())]
        seen = set()
        while stack:
            u, prefix = stack.pop()
            if u == node:
                return prefix
            if u in seen or u > node:
                continue
            seen.add(u)
            for e in reversed(self.out_edges(u)):
                stack.append((int(self.targets[e]), prefix + (self.label_vocab[self.labels[e]],)))
        raise GraphError(f"node {node} unreachable")

    def max_out_degree(self) -> int:
        return int(np.diff(self.indptr).max())

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.targets, minlength=self.node_count)

    def is_tree(self) -> bool:
        """True when every node except the source and sink has in-degree 1."""
        deg = self.in_degrees()
        return bool(np.all(deg[1:self.sink] == 1))

    def stats(self) -> dict[str, int]:
        return {"nodes": self.node_count, "edges": self.edge_count,
                "paths": self.count_paths()}

    # -- persistence ----------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{u}\t{v}\t{z}" for u, v, z in self.edges]
        lines.append(f"final\t{self.sink}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str) -> "ComponentGraph":
        edges = []
        sink = None
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            cols = line.split("\t")
            if cols[0] == "final":
                sink = int(cols[1])
                continue
            if len(cols) != 3:
                raise GraphError(f"line {lineno}: expected u<TAB>v<TAB>label")
            edges.append((int(cols[0]), int(cols[1]), cols[2]))
        if sink is None:
            raise GraphError("missing final line")
        return cls(sink + 1, edges)

    @classmethod
    def load(cls, path: str | Path) -> "ComponentGraph":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def __repr__(self):
        return f"ComponentGraph(nodes={self.node_count}, edges={self.edge_count})"


# -- construction ---------------------------------------------------------------

class _State:
    __slots__ = ("arcs", "final", "sig")

    def __init__(self):
        self.arcs: dict[str, _State] = {}
        self.final = False
        self.sig = None

    def signature(self):
        return (self.final, tuple(sorted((z, id(s)) for z, s in self.arcs.items())))


def _freeze(root: _State) -> ComponentGraph:
    # discovery order from a label-sorted DFS, then Kahn's algorithm keyed on it
    order: dict[int, int] = {}
    states: dict[int, _State] = {}
    stack = [root]
    while stack:
        s = stack.pop()
        if id(s) in order:
            continue
        order[id(s)] = len(order)
        states[id(s)] = s
        for z in sorted(s.arcs, key=label_key, reverse=True):
            stack.append(s.arcs[z])
    indeg = dict.fromkeys(order, 0)
    for s in states.values():
        for t in s.arcs.values():
            indeg[id(t)] += 1
    heap = [(order[id(root)], id(root))]
    ids: dict[int, int] = {}
    while heap:
        _, sid = heapq.heappop(heap)
        ids[sid] = len(ids)
        for t in states[sid].arcs.values():
            indeg[id(t)] -= 1
            if indeg[id(t)] == 0:
                heapq.heappush(heap, (order[id(t)], id(t)))
    edges = [(ids[sid], ids[id(t)], z) for sid, s in states.items() for z, t in s.arcs.items()]
    return ComponentGraph(len(ids), edges)


def _check_sequences(sequences) -> list[tuple[str, ...]]:
    seqs = {tuple(s) for s in sequences}
    if not seqs:
        raise GraphError("cannot build a graph from an empty sequence set")
    for s in seqs:
        if not s:
            raise GraphError("empty sequence")
        if EOS in s:
            raise GraphError(f"{EOS} is reserved")
    return sorted(seqs)


def build_graph(sequences: Iterable[Sequence[str]]) -> ComponentGraph:
    """Minimal DAFSA accepting exactly ``sequences``.

    Incremental construction over sorted input with a register of equivalent
    states; each sequence is terminated by an EOS edge into the shared sink.
    """
    seqs = _check_sequences(sequences)
    register: dict[tuple, _State] = {}
    root = _State()

    def replace_or_register(state: _State):
        last_label = max(state.arcs, key=label_key, default=None)  # most recent child
        child = state.arcs[last_label]
        if child.arcs:
            replace_or_register(child)
        sig = child.signature()
        existing = register.get(sig)
        if existing is not None and existing is not child:
            state.arcs[last_label] = existing
        else:
            register[sig] = child

    # sort with EOS-first ordering so "most recent child" is the max label
    words = sorted((s + (EOS,) for s in seqs), key=lambda w: [label_key(z) for z in w])
    for word in words:
        state = root
        i = 0
        while i < len(word) and word[i] in state.arcs:
            state = state.arcs[word[i]]
            i += 1
        if state.arcs:
            replace_or_register(state)
        for z in word[i:]:
            nxt = _State()
            state.arcs[z] = nxt
            state = nxt
        state.final = True
    if root.arcs:
        replace_or_register(root)
    return _freeze(root)


def build_trie(sequences: Iterable[Sequence[str]]) -> ComponentGraph:
    """Prefix tree with a shared EOS sink (no suffix sharing)."""
    seqs = _check_sequences(sequences)
    root = _State()
    sink = _State()
    sink.final = True
    for s in seqs:
        state = root
        for z in s:
            state = state.arcs.setdefault(z, _State())
        state.arcs[EOS] = sink
    return _freeze(root)


def union_graphs(graphs: Sequence[ComponentGraph]) -> ComponentGraph:
    """Minimal DAFSA accepting the union of the inputs' accepted sets."""
    seqs = set()
    for g in graphs:
        seqs.update(g.iter_paths())
    return build_graph(seqs)


class SearchError(RuntimeError):
    """No finite-score path reaches the sink."""


@dataclass(frozen=True)
class Translation:
    """A decoded path: labels from the search start (EOS stripped) and its score."""

    labels: tuple[str, ...]
    score: float
    language: str | None = None
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def with_language(self, token: str | None) -> "Translation":
        return Translation(self.labels, self.score, token, self.diagnostics)

    @property
    def components(self) -> tuple[str, ...]:
        """Labels without a leading language token."""
        if self.labels and is_language_token(self.labels[0]):
            return self.labels[1:]
        return self.labels


def trace_back(graph: ComponentGraph, pi_edge, start: int) -> tuple[str, ...]:
    """Follow per-node incoming-edge backpointers from the sink to ``start``."""
    labels = []
    v = graph.sink
    while v != start:
        e = pi_edge[v]
        if e < 0:
            raise SearchError("broken backpointer chain")
        labels.append(graph.label_vocab[graph.labels[e]])
        v = int(graph.edge_sources[e])
    labels.reverse()
    if labels and labels[-1] == EOS:
        labels.pop()
    return tuple(labels)


def banned_mask(graph: ComponentGraph, banned) -> np.ndarray:
    """Edge mask for ``(node, label)`` pairs; empty when nothing is banned."""
    if not banned:
        return np.zeros(0, dtype=np.uint8)
    mask = np.zeros(graph.edge_count, dtype=np.uint8)
    for u, z in banned:
        lid = graph.label_id.get(z)
        if lid is None:
            continue
        for e in graph.out_edges(u):
            if graph.labels[e] == lid:
                mask[e] = 1
    return mask
