"""Exact-match ranking metrics and dataset splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .automaton import EOS
from .corpus import ParallelCorpus, is_language_token, merge_bpe


def normalize_labels(labels: Sequence[str], bpe: bool = False) -> tuple[str, ...]:
    """Strip EOS and a leading language token; optionally undo subword splits."""
    out = [z for z in labels if z != EOS]
    if out and is_language_token(out[0]):
        out = out[1:]
    if bpe:
        out = merge_bpe(out)
    return tuple(out)


@dataclass
class EvalRecord:
    source: tuple[str, ...]
    gold: tuple[str, ...]
    kbest: list[tuple[str, ...]]
    tag: str | None = None
    well_formed: bool = True
    k_requested: int | None = None

    @property
    def matched_rank(self) -> int | None:
        for rank, labels in enumerate(self.kbest, 1):
            if labels == self.gold:
                return rank
        return None


@dataclass
class EvalSummary:
    n: int
    acc_at_1: float
    acc_at_10: float | None
    mrr: float
    well_formed_rate: float
    per_tag: dict[str, "EvalSummary"] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float | int | None]:
        return {"n": self.n, "acc@1": self.acc_at_1, "acc@10": self.acc_at_10,
                "mrr": self.mrr, "well_formed": self.well_formed_rate}

    def to_lines(self) -> list[str]:
        """``metric<TAB>value`` lines; per-tag rows are prefixed ``tag:``."""
        lines = [f"{k}\t{_fmt(v)}" for k, v in self.as_dict().items()]
        for tag, sub in sorted(self.per_tag.items()):
            lines.extend(f"{tag}:{k}\t{_fmt(v)}" for k, v in sub.as_dict().items())
        return lines

    def to_table(self) -> str:
        rows = [("all", self)] + sorted(self.per_tag.items())
        out = [f"{'set':<12}{'n':>7}{'Acc@1':>9}{'Acc@10':>9}{'MRR':>9}{'WF':>9}"]
        for name, s in rows:
            a10 = "-" if s.acc_at_10 is None else f"{100 * s.acc_at_10:.1f}"
            out.append(f"{name:<12}{s.n:>7}{100 * s.acc_at_1:>9.1f}{a10:>9}"
                       f"{100 * s.mrr:>9.1f}{100 * s.well_formed_rate:>9.1f}")
        return "\n".join(out)


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _summarize(records: Sequence[EvalRecord]) -> EvalSummary:
    n = len(records)
    ranks = [r.matched_rank for r in records]
    acc1 = sum(1 for r in ranks if r == 1) / n
    ks = [r.k_requested if r.k_requested is not None else len(r.kbest) for r in records]
    acc10 = sum(1 for r in ranks if r is not None and r <= 10) / n if min(ks) >= 10 else None
    mrr = math.fsum(1.0 / r for r in ranks if r is not None) / n
    wf = sum(1 for r in records if r.well_formed) / n
    return EvalSummary(n, acc1, acc10, mrr, wf)


def evaluate(records: Sequence[EvalRecord]) -> EvalSummary:
    """Acc@1, Acc@10 and MRR (misses count 0) over exact-match ranks.

    Acc@10 is ``None`` unless every record was decoded with k >= 10.
    """
    if not records:
        raise ValueError("no records to evaluate")
    summary = _summarize(records)
    tags = sorted({r.tag for r in records if r.tag is not None})
    for tag in tags:
        summary.per_tag[tag] = _summarize([r for r in records if r.tag == tag])
    return summary


def split_dataset(corpus: ParallelCorpus, fractions: Sequence[float] = (0.8, 0.1, 0.1),
                  seed: int = 0) -> tuple[ParallelCorpus, ParallelCorpus, ParallelCorpus]:
    """Seeded train/dev/test partition; sizes are within one of the fractions."""
    if len(fractions) != 3:
        raise ValueError("need three fractions")
    if any(f < 0 or f > 1 for f in fractions):
        raise ValueError("fractions must lie in [0, 1]")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError("fractions must sum to 1")
    n = len(corpus)
    order = np.random.default_rng(seed).permutation(n)
    n_train = round(fractions[0] * n)
    n_dev = min(round(fractions[1] * n), n - n_train)
    if fractions[2] == 0:
        n_dev = n - n_train
    cuts = (n_train, n_train + n_dev)
    parts = (order[:cuts[0]], order[cuts[0]:cuts[1]], order[cuts[1]:])
    return tuple(ParallelCorpus.from_pairs(corpus.pairs[i] for i in sorted(p))
                 for p in parts)
