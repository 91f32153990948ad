"""Graph-constrained semantic parsing into a finite space of code signatures.

Target sequences are compiled into a minimal acyclic automaton; inputs are
translated by shortest-path search over it with a lexical (Model 1) or a
small attention-based neural scorer.
"""

from .automaton import (EOS, ComponentGraph, GraphError, SearchError, Translation, build_graph,
                        build_trie, union_graphs)
from .corpus import (BpeModel, CorpusError, Pair, ParallelCorpus, apply_bpe, learn_bpe,
                     load_corpus, make_language_token, make_pair)
from .evaluation import EvalRecord, EvalSummary, evaluate, split_dataset
from .kbest import ConstrainedDecodeRequest, KBestList, decode_k
from .kernels import BACKEND
from .lexical_decoder import LexicalScorer, decode_lexical, score_path
from .lexical_model import TranslationTable, sentence_likelihood, train_model1
from .neural_decoder import NeuralScorer, decode_neural
from .neural_model import NeuralConfig, NeuralModel, train
from .pipeline import Translator

__version__ = "0.1.0"

__all__ = [
    "EOS", "ComponentGraph", "GraphError", "SearchError", "Translation", "build_graph",
    "build_trie", "union_graphs", "BpeModel", "CorpusError", "Pair", "ParallelCorpus",
    "apply_bpe", "learn_bpe", "load_corpus", "make_language_token", "make_pair", "EvalRecord",
    "EvalSummary", "evaluate", "split_dataset", "ConstrainedDecodeRequest", "KBestList",
    "decode_k", "BACKEND", "LexicalScorer", "decode_lexical", "score_path", "TranslationTable",
    "sentence_likelihood", "train_model1", "NeuralScorer", "decode_neural", "NeuralConfig",
    "NeuralModel", "train", "Translator",
]
