"""Shared fixtures and independent reference implementations for the tests."""

from __future__ import annotations

import itertools
import math
import random

import numpy as np

from spparse.automaton import EOS, ComponentGraph
from spparse.corpus import ParallelCorpus, make_pair
from spparse.lexical_model import TranslationTable
from spparse.neural_model import (NeuralConfig, NeuralModel, encode, init_state, predict,
                                  token_log_probs, update_state)
from spparse import autodiff as ad

SOURCE_WORDS = list("uvwxy")
TARGET_WORDS = list("abcdef")


def random_sequences(rng: random.Random, n_max=20, alphabet="abcde", max_len=4):
    n = rng.randint(1, n_max)
    return {tuple(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))
            for _ in range(n)}


def random_table(rng: random.Random, givens=TARGET_WORDS, generated=SOURCE_WORDS,
                 null=True, density=1.0) -> TranslationTable:
    probs = {}
    for z in list(givens) + (["<null>"] if null else []):
        row = {w: rng.random() for w in generated if rng.random() < density}
        total = sum(row.values())
        if total:
            probs[z] = {w: p / total for w, p in row.items()}
    return TranslationTable(probs)


def random_input(rng: random.Random, length=3, words=SOURCE_WORDS):
    return [rng.choice(words) for _ in range(rng.randint(1, length))]


def small_model(seed=0, copy=False, bias=False, size=6, src=SOURCE_WORDS,
                tgt=TARGET_WORDS, scale=0.0) -> NeuralModel:
    inv = None
    if bias:
        rng = random.Random(seed)
        inv = TranslationTable({w: {z: rng.random() for z in tgt} for w in src}, "inverse")
    cfg = NeuralConfig(size, size, size, size, use_bias=bias, copy=copy, init_scale=scale)
    return NeuralModel.create(cfg, src, tgt, seed, inv)


def perturb(model: NeuralModel, seed: int, sigma=0.3) -> NeuralModel:
    rng = np.random.default_rng(seed)
    for v in model.params.values():
        v += rng.normal(0.0, sigma, v.shape)
    return model


def right_languages(graph: ComponentGraph) -> list[frozenset]:
    """Right language of every node, computed bottom-up."""
    langs: list[frozenset] = [frozenset()] * graph.node_count
    langs[graph.sink] = frozenset({()})
    for u in range(graph.sink - 1, -1, -1):
        acc = set()
        for v, z in graph.adjacency(u):
            for suffix in langs[v]:
                acc.add((z,) + suffix)
        langs[u] = frozenset(acc)
    return langs


def minimal_state_count(graph: ComponentGraph) -> int:
    """States of the minimal equivalent automaton: distinct right languages."""
    return len(set(right_languages(graph)))


def brute_force_likelihood(table: TranslationTable, x, z) -> float:
    """Model 1 p(x|z) by summing over every alignment, NULL included."""
    given = [table.null_token] + list(z)
    total = 0.0
    for a in itertools.product(range(len(given)), repeat=len(x)):
        p = 1.0
        for j, i in enumerate(a):
            p *= table.lookup(x[j], given[i])
        total += p
    return total / len(given) ** len(x)


def greedy_walk(model: NeuralModel, graph: ComponentGraph, x) -> tuple[tuple[str, ...], float]:
    """Follow the locally most probable edge, recomputing the state from scratch each step."""
    labels: list[str] = []
    score = 0.0
    u = graph.source
    with ad.no_grad():
        enc = encode(model, x)
        while u != graph.sink:
            state = init_state(model, enc)
            for z in labels:
                state = update_state(state, predict(model, state, enc), z)
            out = predict(model, state, enc)
            adj = graph.adjacency(u)
            lps = token_log_probs(model, out, enc, [z for _, z in adj])
            best = max(range(len(adj)), key=lambda k: (lps[k], -k))
            score -= lps[best]
            v, z = adj[best]
            labels.append(z)
            u = v
    assert labels[-1] == EOS
    return tuple(labels[:-1]), score


def toy_two_language_corpus() -> ParallelCorpus:
    rows = [
        ("round up a number", "numeric math ceil arg", "C"),
        ("round down a number", "numeric math floor arg", "C"),
        ("absolute value of a number", "numeric math abs arg", "C"),
        ("length of a string", "size_t strlen str", "C"),
        ("copy a string", "char strcpy dst src", "C"),
        ("round up a number", "clojure.math ceil x", "Clojure"),
        ("round down a number", "clojure.math floor x", "Clojure"),
        ("length of a collection", "clojure.core count coll", "Clojure"),
        ("reverse a collection", "clojure.core reverse coll", "Clojure"),
        ("first item of a collection", "clojure.core first coll", "Clojure"),
    ]
    return ParallelCorpus.from_pairs(make_pair(s.split(), t.split(), tag) for s, t, tag in rows)


def overfit_corpus() -> ParallelCorpus:
    words = ("max min ceil floor abs sqrt pow log exp sin cos tan round trunc sum mean "
             "sort len rev copy").split()
    rng = random.Random(0)
    pairs = []
    for w in words:
        src = ["return", "the", w + "_x", "value"][:rng.randint(2, 4)] + [w + "_q"]
        pairs.append(make_pair(src, ["numeric", "math", w, "arg"]))
    return ParallelCorpus.from_pairs(pairs)


def is_close(a: float, b: float, tol=1e-9) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
