"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 search failure.
Options may also come from ``--config FILE`` (``key = value`` lines, keys
named like the long options); explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor

from .automaton import ComponentGraph, GraphError, SearchError
from .corpus import (BPE_SIDES, TAG_MODES, BpeModel, CorpusError, bpe_corpus, learn_bpe,
                     load_corpus)
from .evaluation import EvalRecord, evaluate, normalize_labels
from .lexical_model import NULL
from .neural_decoder import DEFAULT_BEAM
from .neural_model import NeuralConfig, TrainingError
from .pipeline import SCORERS, TrainSettings, Translator, graph_from_corpora, load_corpora, \
    train_model_dir

log = logging.getLogger("spparse")

EXIT_USAGE, EXIT_DATA, EXIT_SEARCH = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


# -- subcommands --------------------------------------------------------------------

def cmd_learn_bpe(args) -> int:
    corpus = load_corpora(args.corpus, args.tag_mode)
    model = learn_bpe(corpus, args.merges, args.side)
    model.save(args.output)
    print(f"{model.merge_count} merges")
    return 0


def _maybe_bpe_targets(corpus, args):
    if getattr(args, "bpe_model", None) and args.bpe_side in ("target", "both"):
        return bpe_corpus(corpus, BpeModel.load(args.bpe_model), "target")
    return corpus


def cmd_build_graph(args) -> int:
    corpora = [_maybe_bpe_targets(load_corpus(p, args.tag_mode), args) for p in args.corpus]
    graph = graph_from_corpora(corpora)
    graph.save(args.output)
    stats = graph.stats()
    log.info("graph %s: %d nodes, %d edges, %d paths", args.output,
             stats["nodes"], stats["edges"], stats["paths"])
    for key in ("nodes", "edges", "paths"):
        print(f"{key}\t{stats[key]}")
    print(f"{stats['paths']} paths")
    return 0


def cmd_train(args) -> int:
    corpus = load_corpora(args.corpus, args.tag_mode)
    cfg = NeuralConfig(args.embed, args.hidden, args.attention, args.mlp, args.epsilon,
                       args.bias, args.copy)
    settings = TrainSettings(args.scorer, args.iterations, not args.no_null, args.epochs,
                             args.lr, args.seed, cfg,
                             args.bpe_side if args.bpe_model else None)
    bpe = BpeModel.load(args.bpe_model) if args.bpe_model else None
    graph = ComponentGraph.load(args.graph) if args.graph else None
    traces = train_model_dir(corpus, args.model_dir, settings, bpe, graph)
    for name, values in traces.items():
        if values:
            print(f"{name}\t{values[-1]!r}")
    return 0


def _translator(args) -> Translator:
    graph = ComponentGraph.load(args.graph)
    return Translator.load(args.model_dir, graph, args.scorer, args.beam)


def _read_inputs(args) -> list[str]:
    if args.text:
        return [" ".join(args.text)]
    fh = sys.stdin if args.input in (None, "-") else open(args.input, encoding="utf-8")
    with fh:
        lines = [line.rstrip("\n").split("\t")[0] for line in fh]
    return [line for line in lines if line.strip()]


def _run_lines(args, k: int) -> int:
    tr = _translator(args)
    inputs = _read_inputs(args)

    def work(text):
        return tr.kbest(text, k, args.language)

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            results = list(pool.map(work, inputs))
    else:
        results = [work(text) for text in inputs]
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for text, ranked in zip(inputs, results):
            for rank, t in enumerate(ranked, 1):
                if not tr.graph.accepts(t.labels):
                    raise SearchError(f"ill-formed output for {text!r}")
                out.write(f"{text}\t{rank}\t{t.score!r}\t{' '.join(t.labels)}\n")
                log.info("%s\trank %d\t%s", text, rank, t.diagnostics)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_decode(args) -> int:
    return _run_lines(args, args.k)


def cmd_kbest(args) -> int:
    return _run_lines(args, args.k)


def read_decoded(path: str) -> dict[str, list[tuple[int, tuple[str, ...]]]]:
    by_input: dict[str, list[tuple[int, tuple[str, ...]]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 4:
                raise CorpusError(f"{path}:{lineno}: expected input, rank, score, labels")
            by_input.setdefault(cols[0], []).append((int(cols[1]), tuple(cols[3].split())))
    return by_input


def cmd_eval(args) -> int:
    gold = load_corpora(args.gold, args.tag_mode)
    decoded = read_decoded(args.decoded)
    graph = ComponentGraph.load(args.graph) if args.graph else None
    records = []
    for pair in gold:
        key = " ".join(pair.source_tokens)
        ranked = [labels for _, labels in sorted(decoded.get(key, []))]
        wf = graph is None or all(graph.accepts(lab) for lab in ranked)
        records.append(EvalRecord(
            pair.source_tokens, normalize_labels(pair.target_tokens),
            [normalize_labels(lab, args.bpe) for lab in ranked], pair.language_tag, wf,
            args.k))
    summary = evaluate(records)
    if args.format in ("table", "both"):
        print(summary.to_table())
    if args.format in ("kv", "both"):
        print("\n".join(summary.to_lines()))
    return 0


def cmd_query(args) -> int:
    tr = _translator(args)
    groups = tr.query(" ".join(args.text), args.k)
    for name in sorted(groups):
        print(f"[{name or '-'}]")
        for t in groups[name]:
            print(f"  {t.score:.4f}\t{' '.join(t.components)}")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spparse", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value defaults file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def corpus_opts(sp, nargs="+"):
        sp.add_argument("corpus", nargs=nargs)
        sp.add_argument("--tag-mode", choices=TAG_MODES, default="none")

    sp = sub.add_parser("learn-bpe", help="learn subword merges")
    corpus_opts(sp)
    sp.add_argument("--merges", type=int, default=10000)
    sp.add_argument("--side", choices=BPE_SIDES, default="both")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_learn_bpe)

    sp = sub.add_parser("build-graph", help="compile target sequences into a DAFSA")
    corpus_opts(sp)
    sp.add_argument("--bpe-model")
    sp.add_argument("--bpe-side", choices=BPE_SIDES, default="both")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_build_graph)

    sp = sub.add_parser("train", help="train lexical (and neural) models")
    corpus_opts(sp)
    sp.add_argument("--model-dir", required=True)
    sp.add_argument("--scorer", choices=SCORERS, default="lexical")
    sp.add_argument("--graph", help="add the graph's labels to the neural output vocabulary")
    sp.add_argument("--iterations", type=int, default=10)
    sp.add_argument("--no-null", action="store_true", help=f"train without the {NULL} word")
    sp.add_argument("--epochs", type=int, default=20)
    sp.add_argument("--lr", type=float, default=0.1)
    sp.add_argument("--embed", type=int, default=64)
    sp.add_argument("--hidden", type=int, default=64)
    sp.add_argument("--attention", type=int, default=64)
    sp.add_argument("--mlp", type=int, default=64)
    sp.add_argument("--epsilon", type=float, default=1e-3)
    sp.add_argument("--bias", action="store_true", help="lexical bias from the inverse table")
    sp.add_argument("--copy", action="store_true", help="enable copy actions")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bpe-model")
    sp.add_argument("--bpe-side", choices=BPE_SIDES, default="both")
    sp.set_defaults(func=cmd_train)

    def decode_opts(sp, k):
        sp.add_argument("--graph", required=True)
        sp.add_argument("--model-dir", required=True)
        sp.add_argument("--scorer", choices=SCORERS, default="lexical")
        sp.add_argument("--language", help="monolingual decoding into this language")
        sp.add_argument("--beam", type=int, default=DEFAULT_BEAM)
        sp.add_argument("-k", "--k", type=int, default=k)

    for name, k, func in (("decode", 1, cmd_decode), ("kbest", 10, cmd_kbest)):
        sp = sub.add_parser(name, help=f"translate input lines ({name})")
        decode_opts(sp, k)
        sp.add_argument("--input", help="input file (first column used); default stdin")
        sp.add_argument("--text", nargs="+", help="translate this text instead")
        sp.add_argument("-o", "--output")
        sp.add_argument("--jobs", type=int, default=1)
        sp.set_defaults(func=func)

    sp = sub.add_parser("eval", help="score a decoded file against gold pairs")
    sp.add_argument("--gold", nargs="+", required=True)
    sp.add_argument("--tag-mode", choices=TAG_MODES, default="none")
    sp.add_argument("--decoded", required=True)
    sp.add_argument("--graph", help="check well-formedness against this graph")
    sp.add_argument("--bpe", action="store_true", help="merge subword units before matching")
    sp.add_argument("-k", "--k", type=int, help="k used when decoding")
    sp.add_argument("--format", choices=("table", "kv", "both"), default="both")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("query", help="polyglot k-best grouped by language")
    decode_opts(sp, 10)
    sp.add_argument("text", nargs="+")
    sp.set_defaults(func=cmd_query)
    return p


def _coerce(parser, command, values):
    """Turn config strings into typed defaults for ``command``'s subparser."""
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = subparsers.choices[command]
    out = {}
    for action in sp._actions:
        if action.dest not in values:
            continue
        raw = values[action.dest]
        if isinstance(action, argparse._StoreTrueAction):
            out[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*"):
            out[action.dest] = raw.split()
        else:
            out[action.dest] = action.type(raw) if action.type else raw
    unknown = set(values) - {a.dest for a in sp._actions}
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    sp.set_defaults(**out)
    for action in sp._actions:
        if action.dest in out:
            action.required = False
            if action.nargs == "+":
                action.nargs = "*"


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        pre = _Parser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            subparsers = next(a for a in parser._actions
                              if isinstance(a, argparse._SubParsersAction))
            command = next((a for a in argv if a in subparsers.choices), None)
            if command is not None:
                _coerce(parser, command, read_config(known.config))
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as e:
        print(f"spparse: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SearchError as e:
        print(f"spparse: search failed: {e}", file=sys.stderr)
        return EXIT_SEARCH
    except (CorpusError, GraphError, TrainingError, OSError, ValueError, KeyError) as e:
        print(f"spparse: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
