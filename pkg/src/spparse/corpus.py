"""Parallel text/component corpora, subword encoding and language tokens."""

from __future__ import annotations

import collections
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

LANG_PREFIX = "2"
EOW = "</w>"

TAG_MODES = ("none", "from_column", "from_filename")
BPE_SIDES = ("source", "target", "both")


class CorpusError(ValueError):
    """Raised for malformed or empty corpus input."""


def make_language_token(name: str) -> str:
    """Artificial output token identifying a target language, e.g. ``C -> 2C``."""
    if not name:
        raise ValueError("language name must be non-empty")
    return LANG_PREFIX + name


def is_language_token(token: str) -> bool:
    return len(token) > len(LANG_PREFIX) and token.startswith(LANG_PREFIX)


def language_name(token: str) -> str:
    if not is_language_token(token):
        raise ValueError(f"not a language token: {token!r}")
    return token[len(LANG_PREFIX):]


@dataclass(frozen=True)
class Pair:
    source_tokens: tuple[str, ...]
    target_tokens: tuple[str, ...]
    language_tag: str | None = None

    def __post_init__(self):
        if not self.source_tokens or not self.target_tokens:
            raise CorpusError("pair sides must be non-empty")
        if self.language_tag is not None:
            if self.target_tokens[0] != make_language_token(self.language_tag):
                raise CorpusError(
                    f"target must start with {make_language_token(self.language_tag)!r}")

    @property
    def components(self) -> tuple[str, ...]:
        """Target tokens with the language token removed."""
        if self.language_tag is None:
            return self.target_tokens
        return self.target_tokens[1:]


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: tuple[Pair, ...]
    source_vocab: frozenset[str] = field(default=frozenset())
    target_vocab: frozenset[str] = field(default=frozenset())

    @classmethod
    def from_pairs(cls, pairs: Iterable[Pair]) -> "ParallelCorpus":
        pairs = tuple(pairs)
        src = frozenset(t for p in pairs for t in p.source_tokens)
        tgt = frozenset(t for p in pairs for t in p.target_tokens)
        return cls(pairs, src, tgt)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def languages(self) -> list[str]:
        return sorted({p.language_tag for p in self.pairs if p.language_tag is not None})

    def target_sequences(self) -> set[tuple[str, ...]]:
        return {p.target_tokens for p in self.pairs}

    def __add__(self, other: "ParallelCorpus") -> "ParallelCorpus":
        return ParallelCorpus.from_pairs(self.pairs + other.pairs)


def make_pair(source: Sequence[str], components: Sequence[str],
              tag: str | None = None) -> Pair:
    """Build a pair, prepending the language token when a tag is given."""
    target = tuple(components)
    if tag is not None:
        target = (make_language_token(tag),) + target
    return Pair(tuple(source), target, tag)


def parse_line(line: str, tag_mode: str = "none", default_tag: str | None = None,
               lineno: int = 0) -> Pair:
    cols = line.rstrip("\n").split("\t")
    if len(cols) not in (2, 3):
        raise CorpusError(f"line {lineno}: expected 2 or 3 tab-separated columns, "
                          f"got {len(cols)}")
    source, target = cols[0].split(), cols[1].split()
    if not source or not target:
        raise CorpusError(f"line {lineno}: empty source or target")
    if tag_mode == "from_column":
        if len(cols) != 3 or not cols[2].strip():
            raise CorpusError(f"line {lineno}: tag column missing")
        tag = cols[2].strip()
    elif tag_mode == "from_filename":
        tag = default_tag
    else:
        tag = None
    return make_pair(source, target, tag)


def load_corpus(path: str | Path, tag_mode: str = "none") -> ParallelCorpus:
    """Read a ``source TAB target [TAB tag]`` file into a corpus.

    With ``tag_mode="from_filename"`` the language name is the file stem
    (``c.tsv`` -> ``2c``).
    """
    if tag_mode not in TAG_MODES:
        raise ValueError(f"tag_mode must be one of {TAG_MODES}")
    path = Path(path)
    default_tag = path.stem if tag_mode == "from_filename" else None
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            pairs.append(parse_line(line, tag_mode, default_tag, lineno))
    if not pairs:
        raise CorpusError(f"{path}: empty corpus")
    log.debug("loaded %d pairs from %s", len(pairs), path)
    return ParallelCorpus.from_pairs(pairs)


def write_corpus(corpus: ParallelCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus:
            cols = [" ".join(p.source_tokens), " ".join(p.components)]
            if p.language_tag is not None:
                cols.append(p.language_tag)
            fh.write("\t".join(cols) + "\n")


# -- byte-pair encoding --------------------------------------------------------

@dataclass(frozen=True)
class BpeModel:
    merges: tuple[tuple[str, str], ...] = ()

    @property
    def merge_count(self) -> int:
        return len(self.merges)

    @property
    def ranks(self) -> dict[tuple[str, str], int]:
        return {m: i for i, m in enumerate(self.merges)}

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for a, b in self.merges:
                fh.write(f"{a} {b}\n")

    @classmethod
    def load(cls, path: str | Path) -> "BpeModel":
        merges = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise CorpusError(f"{path}:{lineno}: expected two symbols")
                merges.append((parts[0], parts[1]))
        return cls(tuple(merges))


def _word_symbols(word: str) -> tuple[str, ...]:
    return tuple(word) + (EOW,)


def _merge_symbols(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    a, b = pair
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == a and symbols[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def _side_words(corpus: ParallelCorpus, side: str) -> Iterable[str]:
    for p in corpus:
        if side in ("source", "both"):
            yield from p.source_tokens
        if side in ("target", "both"):
            yield from p.components


def learn_bpe(corpus: ParallelCorpus, merge_count: int = 10000,
              side: str = "both") -> BpeModel:
    """Greedily learn ``merge_count`` merges from word frequencies.

    Words end with a separate ``</w>`` symbol. Ties on pair frequency go to
    the pair seen first (words in order of first appearance, left to right).
    Language tokens are never segmented.
    """
    if merge_count < 0:
        raise ValueError("merge_count must be >= 0")
    if side not in BPE_SIDES:
        raise ValueError(f"side must be one of {BPE_SIDES}")
    if len(corpus) == 0:
        raise CorpusError("cannot learn BPE from an empty corpus")
    freqs: dict[str, int] = collections.Counter()
    for w in _side_words(corpus, side):
        freqs[w] += 1
    vocab = [[_word_symbols(w), f] for w, f in freqs.items()]
    merges = []
    for _ in range(merge_count):
        stats: dict[tuple[str, str], int] = {}
        for symbols, f in vocab:
            for pair in zip(symbols, symbols[1:]):
                stats[pair] = stats.get(pair, 0) + f
        if not stats:
            break
        best = max(stats, key=stats.get)  # first inserted wins ties
        merges.append(best)
        for entry in vocab:
            if best[0] in entry[0]:
                entry[0] = _merge_symbols(entry[0], best)
    return BpeModel(tuple(merges))


def segment_word(model: BpeModel, word: str, ranks=None) -> list[str]:
    ranks = model.ranks if ranks is None else ranks
    symbols = _word_symbols(word)
    while len(symbols) > 1:
        pairs = set(zip(symbols, symbols[1:]))
        best = min(pairs, key=lambda p: ranks.get(p, float("inf")))
        if best not in ranks:
            break
        symbols = _merge_symbols(symbols, best)
    out = list(symbols)
    if out[-1] == EOW:
        out.pop()
        out[-1] += EOW
    return out


def apply_bpe(model: BpeModel, tokens: Sequence[str]) -> list[str]:
    """Segment each token; the final unit of every word carries ``</w>``."""
    ranks = model.ranks
    out: list[str] = []
    for tok in tokens:
        out.extend(segment_word(model, tok, ranks))
    return out


def merge_bpe(units: Sequence[str]) -> list[str]:
    """Inverse of :func:`apply_bpe`: join units up to each ``</w>`` marker."""
    words: list[str] = []
    buf = ""
    for u in units:
        if u.endswith(EOW):
            words.append(buf + u[: -len(EOW)])
            buf = ""
        else:
            buf += u
    if buf:
        words.append(buf)
    return words


def bpe_corpus(corpus: ParallelCorpus, model: BpeModel, side: str = "both") -> ParallelCorpus:
    """Segment one or both sides of a corpus, keeping language tokens intact."""
    if side not in BPE_SIDES:
        raise ValueError(f"side must be one of {BPE_SIDES}")
    ranks = model.ranks
    pairs = []
    for p in corpus:
        src = p.source_tokens
        comps = p.components
        if side in ("source", "both"):
            src = [u for t in src for u in segment_word(model, t, ranks)]
        if side in ("target", "both"):
            comps = [u for t in comps for u in segment_word(model, t, ranks)]
        pairs.append(make_pair(src, comps, p.language_tag))
    return ParallelCorpus.from_pairs(pairs)
