"""Compiled kernels versus the pure-Python fallback.

Times each kernel on both backends with identical inputs, checks that the
outputs are bit-identical and prints the speedup.  The fallback is slow, so
problem sizes are small; pass ``--scale`` to grow them.

    python3 benchmarks/bench_kernels.py [--scale 1.0] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from netembed import _kernels
from netembed.embed import TrainConfig, graph_factorization, train_line, train_skipgram
from netembed.graph import SbmParams, generate_sbm, largest_connected_component
from netembed.walks import WalkConfig, generate_corpus


def _best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if hasattr(a, "center"):
        ok = np.array_equal(a.center, b.center)
        if a.context is not None:
            ok = ok and np.array_equal(a.context, b.context)
        return ok
    return np.array_equal(a.nodes, b.nodes) and np.array_equal(a.offsets, b.offsets)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="multiply block sizes by this")
    ap.add_argument("--repeat", type=int, default=3, help="timed runs per backend (best kept)")
    args = ap.parse_args(argv)

    if "compiled" not in _kernels.BACKENDS:
        raise SystemExit("compiled backend not built; run `pip install -e .` first")
    size = max(10, int(50 * args.scale))
    g, _ = generate_sbm(SbmParams([size] * 3, 0.2, 0.02), seed=1)
    g, _ = largest_connected_component(g)
    cfg = TrainConfig(dim=16)
    corpus = generate_corpus(g, WalkConfig(4, 20), seed=2)
    cases = {
        "walks (first order)": lambda b: generate_corpus(g, WalkConfig(4, 20), 2, backend=b),
        "walks (node2vec)": lambda b: generate_corpus(
            g, WalkConfig(4, 20, "node2vec", 0.5, 2.0), 2, backend=b),
        "skipgram": lambda b: train_skipgram(corpus, cfg, 3, backend=b),
        "line (first order)": lambda b: train_line(g, 1, cfg.replace(epochs=5), 4, backend=b),
        "line (second order)": lambda b: train_line(g, 2, cfg.replace(epochs=5), 4, backend=b),
        "factorization": lambda b: graph_factorization(g, cfg.replace(epochs=20), 5, backend=b),
    }
    print(f"graph: n={g.n}, edges={g.num_edges}; corpus: {len(corpus)} walks, "
          f"{len(corpus.nodes)} tokens")
    print(f"{'kernel':<22}{'compiled s':>12}{'python s':>12}{'speedup':>10}  identical")
    for name, run in cases.items():
        tc, oc = _best_of(lambda: run("compiled"), args.repeat)
        tp, op = _best_of(lambda: run("python"), 1)
        print(f"{name:<22}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {_same(oc, op)}")


if __name__ == "__main__":
    main()
