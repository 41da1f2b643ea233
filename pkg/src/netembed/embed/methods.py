"""Name -> trainer registry used by the harness and the CLI."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

from ..errors import NetEmbedError
from ..graph import Graph
from ..walks import FIRST_ORDER, NODE2VEC, WalkConfig, generate_corpus
from .base import Embedding, TrainConfig
from .factorization import graph_factorization
from .grarep import grarep
from .line import train_line
from .lsm import fit_latent_space
from .skipgram import train_skipgram
from .spectral import spectral_embedding


@dataclass(frozen=True)
class MethodSpec:
    name: str
    deterministic: bool
    walks: bool
    train: Callable


def _walk_method(mode):
    def run(g, cfg, seed, threads, timings):
        t0 = time.perf_counter()
        wc = WalkConfig(cfg.walks_per_node, cfg.walk_length, mode, cfg.p, cfg.q)
        corpus = generate_corpus(g, wc, seed, threads=threads)
        t1 = time.perf_counter()
        emb = train_skipgram(corpus, cfg, seed, n=g.n, threads=threads)
        timings["walk"] = t1 - t0
        timings["train"] = time.perf_counter() - t1
        return emb
    return run


def _timed(fn):
    def run(g, cfg, seed, threads, timings):
        t0 = time.perf_counter()
        emb = fn(g, cfg, seed, threads)
        timings["walk"] = 0.0
        timings["train"] = time.perf_counter() - t0
        return emb
    return run


def _lsm(g, cfg, seed, threads):
    Z, alpha, trace = fit_latent_space(g, cfg.dim, cfg, seed)
    return Embedding(center=Z, method="lsm", seed=seed,
                     info={"alpha": alpha, "loglik_trace": trace})


METHODS = {
    "deepwalk": MethodSpec("deepwalk", False, True, _walk_method(FIRST_ORDER)),
    "node2vec": MethodSpec("node2vec", False, True, _walk_method(NODE2VEC)),
    "line1": MethodSpec("line1", False, False,
                        _timed(lambda g, c, s, t: train_line(g, 1, c, s, threads=t))),
    "line2": MethodSpec("line2", False, False,
                        _timed(lambda g, c, s, t: train_line(g, 2, c, s, threads=t))),
    "gf": MethodSpec("gf", False, False, _timed(lambda g, c, s, t: graph_factorization(g, c, s))),
    "eigenmap": MethodSpec("eigenmap", True, False, _timed(
        lambda g, c, s, t: spectral_embedding(g, c.dim, "laplacian_eigenmap", solver=c.solver))),
    "spectral": MethodSpec("spectral", True, False, _timed(
        lambda g, c, s, t: spectral_embedding(g, c.dim, "adjacency_spectral", solver=c.solver))),
    "grarep": MethodSpec("grarep", True, False, _timed(
        lambda g, c, s, t: grarep(g, c.dim, c.grarep_steps, c.grarep_shift, s))),
    "lsm": MethodSpec("lsm", False, False, _timed(_lsm)),
}

METHOD_NAMES = tuple(METHODS)


def embed_graph(g: Graph, method: str, config: Optional[TrainConfig] = None, seed: int = 0,
                threads: Optional[int] = None) -> Embedding:
    """Train ``method`` on ``g``; stage timings land in ``emb.info['timings']``."""
    try:
        spec = METHODS[method]
    except KeyError:
        raise NetEmbedError(
            f"unknown method {method!r}; valid: {', '.join(METHOD_NAMES)}"
        ) from None
    config = config or TrainConfig()
    timings: dict = {}
    emb = spec.train(g, config, seed, threads or config.threads, timings)
    emb.method = method
    emb.seed = seed
    emb.info["timings"] = timings
    return emb
