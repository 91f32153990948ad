"""IBM Model 1 lexical translation tables trained by EM."""

from __future__ import annotations

import logging
import math
from functools import cached_property
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import CorpusError, ParallelCorpus

log = logging.getLogger(__name__)

NULL = "<null>"
DEFAULT_FLOOR = 1e-10
DIRECTIONS = ("forward", "inverse")


@dataclass
class TranslationTable:
    """One direction of a lexical model: ``probs[given][generated]``.

    For the forward table ``given`` is a component token and ``generated`` a
    text token (p_t(x|z)); the inverse table swaps the roles (p_t'(z|x)).
    """

    probs: dict[str, dict[str, float]]
    direction: str = "forward"
    floor: float = DEFAULT_FLOOR
    null_token: str = NULL

    def lookup(self, generated: str, given: str) -> float:
        row = self.probs.get(given)
        if row is None:
            return self.floor
        return row.get(generated, self.floor)

    @cached_property
    def by_generated(self) -> dict[str, dict[str, float]]:
        """Inverted index ``generated -> {given: p}``."""
        index: dict[str, dict[str, float]] = defaultdict(dict)
        for given, row in self.probs.items():
            for gen, p in row.items():
                index[gen][given] = p
        return dict(index)

    def row(self, given: str) -> dict[str, float]:
        return self.probs.get(given, {})

    @property
    def givens(self) -> list[str]:
        return sorted(self.probs)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# direction={self.direction}\tfloor={self.floor!r}\t"
                     f"null={self.null_token}\n")
            for given in sorted(self.probs):
                for gen, p in sorted(self.probs[given].items()):
                    fh.write(f"{given}\t{gen}\t{p!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "TranslationTable":
        probs: dict[str, dict[str, float]] = defaultdict(dict)
        header = {}
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
            if not first.startswith("#"):
                raise CorpusError(f"{path}: missing table header")
            for item in first[1:].strip().split("\t"):
                key, _, value = item.partition("=")
                header[key.strip()] = value
            for lineno, line in enumerate(fh, 2):
                if not line.strip():
                    continue
                cols = line.rstrip("\n").split("\t")
                if len(cols) != 3:
                    raise CorpusError(f"{path}:{lineno}: expected 3 columns")
                probs[cols[0]][cols[1]] = float(cols[2])
        return cls(dict(probs), header.get("direction", "forward"),
                   float(header.get("floor", DEFAULT_FLOOR)), header.get("null", NULL))


@dataclass
class EmTrace:
    log_likelihood: list[float] = field(default_factory=list)


def _sides(corpus: ParallelCorpus, direction: str):
    """(generated, given) token lists per pair."""
    for p in corpus:
        if direction == "forward":
            yield p.source_tokens, p.target_tokens
        else:
            yield p.target_tokens, p.source_tokens


def train_model1(corpus: ParallelCorpus, iterations: int = 10, direction: str = "forward",
                 use_null: bool = True,
                 floor: float = DEFAULT_FLOOR) -> tuple[TranslationTable, EmTrace]:
    """Run Model 1 EM and return the table plus the per-iteration log-likelihood.

    Initialization is uniform over co-occurring pairs. The likelihood logged
    for iteration k is that of the parameters entering its E-step.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    data = []
    for gen, given in _sides(corpus, direction):
        given = ((NULL,) if use_null else ()) + tuple(given)
        data.append((tuple(gen), given))
    if not data:
        raise CorpusError("cannot train on an empty corpus")

    cooc: dict[str, set[str]] = defaultdict(set)
    for gen, given in data:
        for z in given:
            cooc[z].update(gen)
    t = {z: dict.fromkeys(sorted(xs), 1.0 / len(xs)) for z, xs in sorted(cooc.items())}

    trace = EmTrace()
    for it in range(iterations):
        counts: dict[str, dict[str, float]] = {z: dict.fromkeys(row, 0.0) for z, row in t.items()}
        ll = 0.0
        for gen, given in data:
            for x in gen:
                probs = [t[z][x] for z in given]
                total = math.fsum(probs)
                ll += math.log(total)
                for z, p in zip(given, probs):
                    counts[z][x] += p / total
        for z, row in counts.items():
            norm = math.fsum(row.values())
            t[z] = {x: c / norm for x, c in row.items()}
        trace.log_likelihood.append(ll)
        log.debug("model1 %s iteration %d: log-likelihood %.6f", direction, it + 1, ll)
    return TranslationTable(t, direction, floor), trace


def corpus_log_likelihood(table: TranslationTable, corpus: ParallelCorpus,
                          use_null: bool = True) -> float:
    """Model 1 log-likelihood without the alignment normalizer, which is constant in the table."""
    ll = 0.0
    for gen, given in _sides(corpus, table.direction):
        given = ((table.null_token,) if use_null else ()) + tuple(given)
        for x in gen:
            ll += math.log(math.fsum(table.lookup(x, z) for z in given))
    return ll


def sentence_likelihood(table: TranslationTable, x: Sequence[str], z: Sequence[str],
                        normalize: bool = True) -> float:
    """p(x|z) under Model 1, the NULL word included as z_0.

    With ``normalize`` the product is divided by the number of alignments
    (|z|+1)^|x|; without it the normalizer is dropped, as the decoder does.
    """
    given = (table.null_token,) + tuple(z)
    value = 1.0
    for xj in x:
        value *= math.fsum(table.lookup(xj, zi) for zi in given)
    if normalize:
        value /= (len(z) + 1) ** len(x)
    return value
