"""Time the lexical search kernel: compiled extension vs. pure Python.

    python benchmarks/bench_lexical.py [--sequences 20000] [--words 10] [--repeat 5]

Both backends run on the same graph and inputs; results are checked for
equality before timings are reported.
"""

import argparse
import random
import statistics
import time

import numpy as np

from spparse import kernels
from spparse.automaton import banned_mask, build_graph
from spparse.lexical_decoder import label_probs, null_sums
from spparse.lexical_model import TranslationTable


def make_instance(n_sequences: int, n_words: int, seed: int):
    rng = random.Random(seed)
    tokens = [f"tok{i}" for i in range(400)]
    words = [f"w{i}" for i in range(200)]
    seqs = {(f"2L{rng.randrange(5)}",) + tuple(rng.choice(tokens) for _ in range(rng.randint(2, 7)))
            for _ in range(n_sequences)}
    graph = build_graph(seqs)
    probs = {}
    for z in tokens + ["<null>"]:
        row = {w: rng.random() for w in rng.sample(words, 20)}
        total = sum(row.values())
        probs[z] = {w: p / total for w, p in row.items()}
    table = TranslationTable(probs)
    x = [rng.choice(words) for _ in range(n_words)]
    return graph, table, x


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sequences", type=int, default=20000)
    ap.add_argument("--words", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    graph, table, x = make_instance(args.sequences, args.words, args.seed)
    print(f"graph: {graph.node_count} nodes, {graph.edge_count} edges; |x| = {len(x)}")
    probs = label_probs(graph, table, x)
    init = np.array(null_sums(table, x))
    kernel_args = (graph.indptr, graph.targets, graph.labels, probs, init, graph.source, 0.0,
                   banned_mask(graph, []))

    results, timings = {}, {}
    for name in sorted(kernels.BACKENDS):
        runs = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = kernels.lexical_sssp(*kernel_args, backend=name)
            runs.append(time.perf_counter() - t0)
        results[name] = out
        timings[name] = statistics.median(runs)
        print(f"{name:>9}: median {1e3 * timings[name]:9.2f} ms over {args.repeat} runs")

    if "compiled" in results:
        a, b = results["compiled"], results["python"]
        same = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        print(f"identical outputs: {same}")
        print(f"speedup: {timings['python'] / timings['compiled']:.1f}x")
    else:
        print("compiled extension not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
