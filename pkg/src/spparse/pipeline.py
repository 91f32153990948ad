"""End-to-end composition: graphs, model directories and translation requests."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .automaton import ComponentGraph, Translation, build_graph
from .corpus import (BpeModel, ParallelCorpus, bpe_corpus, is_language_token, language_name,
                     load_corpus, make_language_token, segment_word)
from .kbest import decode_k
from .lexical_decoder import LexicalScorer
from .lexical_model import TranslationTable, train_model1
from .neural_decoder import DEFAULT_BEAM, NeuralScorer
from .neural_model import NeuralConfig, NeuralModel, train

log = logging.getLogger(__name__)

SCORERS = ("lexical", "neural")


@dataclass
class TrainSettings:
    scorer: str = "lexical"
    iterations: int = 10
    use_null: bool = True
    epochs: int = 20
    learning_rate: float = 0.1
    seed: int = 0
    neural: NeuralConfig = field(default_factory=NeuralConfig)
    bpe_side: str | None = None


def graph_from_corpora(corpora: Sequence[ParallelCorpus]) -> ComponentGraph:
    """Union DAFSA over every target sequence (language tokens included)."""
    seqs = set()
    for c in corpora:
        seqs.update(c.target_sequences())
    return build_graph(seqs)


def train_model_dir(corpus: ParallelCorpus, model_dir: str | Path, settings: TrainSettings,
                    bpe: BpeModel | None = None,
                    graph: ComponentGraph | None = None) -> dict[str, list[float]]:
    """Train and write ``forward.tsv``, ``inverse.tsv`` and optionally ``neural.npz``.

    The corpus is segmented first when a BPE model and side are given.
    Returns the training traces.
    """
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    if bpe is not None and settings.bpe_side:
        corpus = bpe_corpus(corpus, bpe, settings.bpe_side)
        bpe.save(model_dir / "bpe.txt")
    forward, ftrace = train_model1(corpus, settings.iterations, "forward", settings.use_null)
    inverse, itrace = train_model1(corpus, settings.iterations, "inverse", settings.use_null)
    forward.save(model_dir / "forward.tsv")
    inverse.save(model_dir / "inverse.tsv")
    traces = {"forward_ll": ftrace.log_likelihood, "inverse_ll": itrace.log_likelihood}
    if settings.scorer == "neural":
        extra = graph.label_vocab if graph is not None else ()
        model = NeuralModel.for_corpus(corpus, settings.neural, settings.seed,
                                       inverse if settings.neural.use_bias else None, extra)
        traces["neural_loss"] = train(model, corpus, settings.epochs, settings.learning_rate,
                                      settings.seed)
        model.save(model_dir / "neural.npz")
    meta = asdict(settings)
    meta["bpe"] = bool(bpe is not None and settings.bpe_side)
    (model_dir / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return traces


class Translator:
    """A graph plus a scorer, with input preprocessing matching training."""

    def __init__(self, graph: ComponentGraph, scorer, bpe: BpeModel | None = None,
                 bpe_side: str | None = None):
        self.graph = graph
        self.scorer = scorer
        self.bpe = bpe
        self.bpe_side = bpe_side

    @classmethod
    def load(cls, model_dir: str | Path, graph: ComponentGraph, scorer: str = "lexical",
             beam: int = DEFAULT_BEAM, use_null: bool | None = None,
             backend: str | None = None) -> "Translator":
        model_dir = Path(model_dir)
        meta = json.loads((model_dir / "run.json").read_text())
        if scorer == "lexical":
            table = TranslationTable.load(model_dir / "forward.tsv")
            null = meta.get("use_null", True) if use_null is None else use_null
            impl = LexicalScorer(table, null, backend)
        elif scorer == "neural":
            path = model_dir / "neural.npz"
            if not path.exists():
                raise FileNotFoundError(f"{path}: no neural model was trained")
            impl = NeuralScorer(NeuralModel.load(path), beam)
        else:
            raise ValueError(f"scorer must be one of {SCORERS}")
        bpe = BpeModel.load(model_dir / "bpe.txt") if meta.get("bpe") else None
        return cls(graph, impl, bpe, meta.get("bpe_side"))

    def prepare(self, text: str | Sequence[str]) -> list[str]:
        tokens = text.split() if isinstance(text, str) else list(text)
        if not tokens:
            raise ValueError("empty input")
        if self.bpe is not None and self.bpe_side in ("source", "both"):
            ranks = self.bpe.ranks
            tokens = [u for t in tokens for u in segment_word(self.bpe, t, ranks)]
        return tokens

    def start_for(self, language: str | None) -> int:
        if language is None:
            return self.graph.source
        return self.graph.language_start(make_language_token(language))

    def kbest(self, text, k: int = 1, language: str | None = None) -> list[Translation]:
        """Ranked translations; labels are full paths from the graph source."""
        tokens = self.prepare(text)
        start = self.start_for(language)
        head = self.graph.path_to(start)
        out = []
        for t in decode_k(tokens, self.graph, self.scorer, k, start):
            labels = head + t.labels
            lang = labels[0] if labels and is_language_token(labels[0]) else None
            out.append(Translation(labels, t.score, lang, t.diagnostics))
        return out

    def query(self, text, k: int = 10) -> dict[str, list[Translation]]:
        """Polyglot k-best grouped by language name (``""`` for untagged paths)."""
        groups: dict[str, list[Translation]] = {}
        for t in self.kbest(text, k):
            name = language_name(t.language) if t.language else ""
            groups.setdefault(name, []).append(t)
        return groups


def load_corpora(paths: Sequence[str | Path], tag_mode: str = "none") -> ParallelCorpus:
    corpus = ParallelCorpus.from_pairs(())
    for p in paths:
        corpus = corpus + load_corpus(p, tag_mode)
    return corpus
