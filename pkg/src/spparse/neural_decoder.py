"""Graph-constrained neural decoding as a beam-limited shortest-path search.

Each reached node stores one decoder state (that of its best incoming path).
At node ``u`` the model is stepped once; only the ``beam`` most probable
outgoing labels are relaxed, each with ``d[u] - log p(z | prefix, x)``.
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Sequence

import numpy as np

from . import autodiff as ad
from .automaton import ComponentGraph, GraphError, SearchError, Translation, banned_mask, trace_back
from .neural_model import (DecoderStepState, NeuralModel, encode, path_score, predict,
                           teacher_force, token_log_probs, update_state)

log = logging.getLogger(__name__)

DEFAULT_BEAM = 5


def normalize_over_adjacency(model: NeuralModel, out, enc, graph: ComponentGraph,
                             u: int, banned: np.ndarray | None = None):
    """Full-vocabulary log-probabilities read off at ``u``'s outgoing labels.

    Returns ``(edges, log_probs, unknown)`` where ``edges`` are edge indices
    in label order and ``unknown`` counts labels missing from the output
    vocabulary (scored as the unknown token).
    """
    edges = [e for e in graph.out_edges(u) if banned is None or not len(banned) or not banned[e]]
    labels = [graph.label_vocab[graph.labels[e]] for e in edges]
    unknown = sum(1 for z in labels if z not in model.tgt_index)
    return edges, token_log_probs(model, out, enc, labels), unknown


def top_edges(log_probs: np.ndarray, beam: int) -> list[int]:
    """Positions of the ``beam`` highest scores; ties keep label order."""
    order = sorted(range(len(log_probs)), key=lambda k: (-log_probs[k], k))
    return order[:beam]


def decode_neural(x: Sequence[str], graph: ComponentGraph, model: NeuralModel,
                  beam: int = DEFAULT_BEAM, start: int | None = None, *,
                  prefix: Sequence[str] = (), banned: Iterable[tuple[int, str]] = (),
                  init_score: float = 0.0, verbose: bool = False) -> Translation:
    """Best path to the sink under the neural scorer.

    Labels leading from the source to ``start`` are teacher-forced without
    being scored (monolingual decoding). ``prefix`` labels from ``start`` are
    forced and scored; the returned labels include them.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    start = graph.source if start is None else start
    if not 0 <= start < graph.node_count:
        raise GraphError(f"start node {start} not in graph")
    node = graph.walk(prefix, start)
    if node is None:
        raise GraphError(f"prefix {' '.join(prefix)!r} is not a path from node {start}")
    mask = banned_mask(graph, list(banned))

    with ad.no_grad():
        enc = encode(model, x)
        state, _ = teacher_force(model, enc, graph.path_to(start))
        state, prefix_score = teacher_force(model, enc, prefix, state)

        V = graph.node_count
        d = np.full(V, np.inf)
        pi = np.full(V, -1, dtype=np.int64)
        states: list[DecoderStepState | None] = [None] * V
        d[node] = init_score + prefix_score
        states[node] = state
        diag = {"visited_nodes": 0, "pruned_edges": 0, "state_clobbers": 0,
                "unknown_labels": 0}
        for u in range(node, V - 1):
            if math.isinf(d[u]):
                continue
            diag["visited_nodes"] += 1
            p = states[u]
            out = predict(model, p, enc)
            edges, lps, unknown = normalize_over_adjacency(model, out, enc, graph, u, mask)
            diag["unknown_labels"] += unknown
            kept = top_edges(lps, beam)
            diag["pruned_edges"] += len(edges) - len(kept)
            for k in kept:
                e = edges[k]
                v = int(graph.targets[e])
                z = int(graph.labels[e])
                score = -lps[k] + d[u]
                if score < d[v] or (score == d[v] and pi[v] >= 0 and z < graph.labels[pi[v]]):
                    d[v] = score
                    pi[v] = e
                    if v != graph.sink:
                        if states[v] is not None:
                            diag["state_clobbers"] += 1
                        states[v] = update_state(p, out, graph.label_vocab[z])
    if verbose:
        log.info("neural search diagnostics: %s", diag)
    if math.isinf(d[graph.sink]):
        raise SearchError("sink unreachable under the beam; increase the beam size")
    labels = tuple(prefix) + trace_back(graph, pi, node)
    return Translation(labels, float(d[graph.sink]), None, diag)


class NeuralScorer:
    """Adapter used by the k-best search."""

    exact_on_trees = True

    def __init__(self, model: NeuralModel, beam: int = DEFAULT_BEAM):
        self.model = model
        self.beam = beam

    def decode(self, x, graph, start=None, prefix=(), banned=()) -> Translation:
        return decode_neural(x, graph, self.model, self.beam, start, prefix=prefix,
                             banned=banned)

    def score(self, x, graph, labels, start=None) -> float:
        start = graph.source if start is None else start
        return path_score(self.model, x, labels, graph.path_to(start))
