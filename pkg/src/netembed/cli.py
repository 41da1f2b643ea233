"""Command-line entry point: ``netembed generate | embed | evaluate | report``.

Exit codes: 0 success, 1 runtime or I/O error, 2 usage or validation error.
Every output file is written to a temporary sibling and renamed into place,
so a failed command leaves no partial output behind.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embed import METHOD_NAMES, TrainConfig, embed_graph
from .embed.base import context_path, read_word2vec, write_word2vec
from .errors import NetEmbedError
from .graph import (
    SbmParams,
    edge_list_text,
    generate_sbm,
    largest_connected_component,
    metadata_from_tables,
    read_edge_list,
    read_node_table,
    write_labels,
)
from .pcs import Experiment, ExperimentPlan, atomic_write, pca_project, summary_table

THREADS_ENV = "NETEMBED_THREADS"
STAGE_NAMES = ("predictability", "computability", "stability")


class UsageError(Exception):
    """Bad flags or configuration; reported with exit code 2."""


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return doc


def _reject_unknown(doc: dict, known, where: str):
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise UsageError(f"unknown {where} keys: {', '.join(unknown)}")


def _read_table(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return read_node_table(fh)


# ------------------------------------------------------------------ generate

GENERATE_KEYS = ("blocks", "p_in", "p_out", "seed", "out")


def cmd_generate(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    _reject_unknown(doc, GENERATE_KEYS, "generate config")
    for key in GENERATE_KEYS:
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    missing = [k for k in ("blocks", "p_in", "p_out") if k not in doc]
    if missing:
        raise UsageError(f"missing SBM parameters: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    blocks = doc["blocks"]
    if isinstance(blocks, str):
        try:
            blocks = [int(x) for x in blocks.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"--blocks must be comma-separated integers, got {doc['blocks']!r}") from None
    try:
        params = SbmParams(list(blocks), float(doc["p_in"]), float(doc["p_out"]))
    except (NetEmbedError, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    seed = int(doc.get("seed", 0))
    if seed < 0:
        raise UsageError("--seed must be non-negative")
    out = doc.get("out") or "."
    g, labels = generate_sbm(params, seed)
    os.makedirs(out, exist_ok=True)
    id_map = {str(i): i for i in range(g.n)}
    buf = io.StringIO()
    write_labels(buf, labels, id_map)
    atomic_write(os.path.join(out, "graph.edges"), edge_list_text(g, id_map))
    atomic_write(os.path.join(out, "labels.csv"), buf.getvalue())
    print(f"wrote {g.n} nodes, {g.num_edges} edges to {out}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------- embed

_TRAIN_FLAGS = {
    "dim": int, "learning_rate": float, "lr_floor": float, "epochs": int, "negatives": int,
    "window": int, "walks_per_node": int, "walk_length": int, "p": float, "q": float,
    "noise_exponent": float, "grarep_steps": int, "grarep_shift": float, "ridge": float,
    "lsm_steps": int, "lsm_alpha_init": float, "solver": str,
}


def _train_config(doc: dict, args) -> TrainConfig:
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    _reject_unknown(doc, known, "training config")
    merged = dict(doc)
    for key in _TRAIN_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    try:
        return TrainConfig(**merged)
    except (NetEmbedError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _load_graph(path, directed=False, node_ids=None):
    try:
        return read_edge_list(path, directed=directed, node_ids=node_ids)
    except OSError as exc:
        raise NetEmbedError(f"cannot read graph {path}: {exc.strerror}") from None


def cmd_embed(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    threads = args.threads or _default_threads()
    cfg = _train_config(doc, args).replace(threads=threads)
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    node_ids = None
    if args.nodes:
        node_ids = _read_table(args.nodes)[1]
    g, id_map = _load_graph(args.graph, args.directed, node_ids)
    names = [None] * g.n
    for name, i in id_map.items():
        names[i] = name
    t0 = time.perf_counter()
    emb = embed_graph(g, args.method, cfg, seed=args.seed, threads=threads)
    elapsed = time.perf_counter() - t0
    buf = io.StringIO()
    write_word2vec(buf, emb.center, names)
    out = args.output
    atomic_write(out, buf.getvalue())
    if emb.context is not None:
        buf = io.StringIO()
        write_word2vec(buf, emb.context, names)
        atomic_write(context_path(out), buf.getvalue())
    log = {"method": args.method, "seed": args.seed, "n": g.n, "dim": emb.dim,
           "seconds": elapsed, "timings": emb.info.get("timings", {}), "config": cfg.to_dict()}
    for key in ("objective_trace", "loss_trace", "loglik_trace", "eigenvalues"):
        if key in emb.info:
            log[key] = np.asarray(emb.info[key]).tolist()
    text = json.dumps(log, sort_keys=True)
    if args.log:
        atomic_write(args.log, text + "\n")
    else:
        print(text, file=sys.stderr)
    return 0


# ------------------------------------------------------------------ evaluate

@dataclass
class RunConfig:
    """Evaluate-command configuration: data paths plus the experiment plan."""
    graph: Optional[str] = None
    labels: Optional[str] = None
    covariates: Optional[str] = None
    out: str = "report"
    directed: bool = False
    largest_component: bool = True
    threads: int = 1
    stages: tuple = STAGE_NAMES
    plan: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        _reject_unknown(doc, [f.name for f in dataclasses.fields(cls)], "run config")
        cfg = cls(**doc)
        cfg.stages = tuple(cfg.stages)
        return cfg

    def validate(self) -> ExperimentPlan:
        if not self.graph:
            raise UsageError("no graph given (--graph or 'graph' in the config)")
        bad = [s for s in self.stages if s not in STAGE_NAMES]
        if bad or not self.stages:
            raise UsageError(f"stages must be a nonempty subset of {', '.join(STAGE_NAMES)}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise UsageError("threads must be a positive integer")
        if not isinstance(self.plan, dict):
            raise UsageError("'plan' must be a JSON object")
        try:
            plan = ExperimentPlan.from_dict(self.plan)
        except (NetEmbedError, TypeError) as exc:
            raise UsageError(f"invalid plan: {exc}") from None
        needs_labels = {"node_classification", "clustering"} & set(plan.tasks)
        if needs_labels and not self.labels:
            raise UsageError(f"tasks {', '.join(sorted(needs_labels))} need --labels")
        return plan

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["stages"] = list(self.stages)
        return d


def cmd_evaluate(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    try:
        run = RunConfig.from_dict(doc)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    for key in ("graph", "labels", "covariates", "out"):
        val = getattr(args, key)
        if val is not None:
            setattr(run, key, val)
    if args.threads is not None:
        run.threads = args.threads
    elif "threads" not in doc:
        run.threads = _default_threads()
    plan_over = {}
    if args.seed is not None:
        plan_over["seed"] = args.seed
    if args.replications is not None:
        plan_over["replications"] = args.replications
    if args.methods:
        plan_over["methods"] = [m for m in args.methods.split(",") if m]
    if args.dims:
        try:
            plan_over["dims"] = [int(x) for x in args.dims.split(",") if x]
        except ValueError:
            raise UsageError(f"--dims must be comma-separated integers, got {args.dims!r}") from None
    run.plan = {**run.plan, **plan_over}
    if args.stages:
        run.stages = tuple(s for s in args.stages.split(",") if s)
    plan = run.validate()

    labels_table = _read_table(run.labels) if run.labels else None
    cov_table = _read_table(run.covariates) if run.covariates else None
    node_ids = labels_table[1] if labels_table else None
    g, id_map = _load_graph(run.graph, run.directed, node_ids)
    meta = metadata_from_tables(id_map, labels_table, cov_table) if (labels_table or cov_table) else None
    if run.largest_component:
        g, meta = largest_connected_component(g, meta)
    exp = Experiment(plan, g, meta, threads=run.threads)
    report = exp.run(predictability="predictability" in run.stages,
                     computability="computability" in run.stages,
                     stability="stability" in run.stages,
                     config=run.to_dict())
    written = report.write(run.out)
    failed = sum(1 for rows in report.rows.values() for r in rows if r["status"] != "ok")
    print(f"wrote {len(written)} files to {run.out}"
          + (f"; {failed} row(s) with failures recorded in 'status'" if failed else ""),
          file=sys.stderr)
    return 0


# -------------------------------------------------------------------- report

def cmd_report(args) -> int:
    labels = None
    if args.labels:
        _, ids, rows = _read_table(args.labels)
        labels = {i: r[0] for i, r in zip(ids, rows)}
    os.makedirs(args.output, exist_ok=True)
    outputs = []
    for path in args.embeddings:
        try:
            with open(path, encoding="utf-8") as fh:
                names, Z = read_word2vec(fh)
        except OSError as exc:
            raise NetEmbedError(f"cannot read embedding {path}: {exc.strerror}") from None
        if labels is not None:
            missing = [nm for nm in names if nm not in labels]
            if missing:
                raise NetEmbedError(f"{path}: {len(missing)} embedded node(s) have no label, "
                                    f"e.g. {missing[0]!r}")
        if Z.shape[1] < 2:
            raise NetEmbedError(f"{path}: need at least 2 dimensions to project, got {Z.shape[1]}")
        scores, var = pca_project(Z, 2)
        buf = io.StringIO()
        buf.write("node,x,y,label\n")
        for nm, (x, y) in zip(names, scores.tolist()):
            lab = labels[nm] if labels is not None else ""
            buf.write(f"{nm},{x!r},{y!r},{lab}\n")
        stem = os.path.splitext(os.path.basename(path))[0]
        outputs.append((os.path.join(args.output, f"{stem}.projection.csv"), buf.getvalue()))
        print(f"{path}: explained variance {var[0]:.6g}, {var[1]:.6g}", file=sys.stderr)
    if args.report:
        src = args.report
        if os.path.isdir(src):
            src = os.path.join(src, "report.json")
        try:
            with open(src, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise NetEmbedError(f"cannot read report {src}: {exc}") from None
        outputs.append((os.path.join(args.output, "summary.txt"), summary_table(doc.get("rows", {}))))
    if not outputs:
        raise UsageError("nothing to do: give embedding files and/or --report")
    for path, text in outputs:
        atomic_write(path, text)
    return 0


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netembed", description="Network embedding toolkit with a "
                                "predictability / computability / stability harness.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a stochastic block model graph",
                       description="Sample an SBM graph; writes graph.edges and labels.csv.")
    g.add_argument("--blocks", help="comma-separated block sizes, e.g. 200,200,200")
    g.add_argument("--p-in", dest="p_in", type=float, help="within-block edge probability")
    g.add_argument("--p-out", dest="p_out", type=float, help="between-block edge probability")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("-o", "--out", help="output directory (default: current directory)")
    g.add_argument("--config", help="JSON file with any of: " + ", ".join(GENERATE_KEYS))
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("embed", help="embed a graph with one method",
                       description="Train an embedding and write it in word2vec text format.")
    e.add_argument("graph", help="edge list: 'src dst [weight]' per line")
    e.add_argument("--method", required=True, choices=METHOD_NAMES, help="embedding method")
    e.add_argument("-o", "--output", required=True, help="output embedding file")
    e.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    e.add_argument("--config", help="JSON file with training settings")
    e.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    e.add_argument("--directed", action="store_true", help="read the edge list as directed")
    e.add_argument("--nodes", help="CSV whose first column lists node ids to keep, in order")
    e.add_argument("--log", help="write the training log here instead of standard error")
    helps = {
        "dim": "embedding dimension", "learning_rate": "initial learning rate",
        "lr_floor": "final learning rate as a fraction of the initial one",
        "epochs": "passes over the corpus or edge set", "negatives": "negative samples per step",
        "window": "SkipGram window", "walks_per_node": "walks started per node",
        "walk_length": "nodes per walk", "p": "node2vec return parameter",
        "q": "node2vec in-out parameter", "noise_exponent": "noise distribution exponent",
        "grarep_steps": "GraRep maximum step K", "grarep_shift": "GraRep log shift",
        "ridge": "factorization ridge penalty", "lsm_steps": "latent space ascent steps",
        "lsm_alpha_init": "latent space intercept start", "solver": "eigen-solver: auto, dense, iterative",
    }
    for key, typ in _TRAIN_FLAGS.items():
        e.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, help=helps[key])
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("evaluate", help="run the experiment harness",
                       description="Run a plan and write per-task CSVs, stability.csv and report.json.")
    v.add_argument("--config", help="JSON run config (graph, labels, covariates, out, directed, "
                   "largest_component, threads, stages, plan)")
    v.add_argument("--graph", help="edge list file")
    v.add_argument("--labels", help="CSV node,label")
    v.add_argument("--covariates", help="CSV node,cov1,cov2,...")
    v.add_argument("-o", "--out", help="output directory")
    v.add_argument("--seed", type=int, help="base seed of the plan")
    v.add_argument("--replications", type=int, help="replications R")
    v.add_argument("--methods", help="comma-separated method names")
    v.add_argument("--dims", help="comma-separated dimensions")
    v.add_argument("--stages", help="comma-separated subset of " + ",".join(STAGE_NAMES))
    v.add_argument("--threads", type=int, help=f"replication pool size (default ${THREADS_ENV} or 1)")
    v.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="2-D projections and a summary table",
                       description="Project embeddings on two principal components and "
                       "summarise a report.")
    r.add_argument("embeddings", nargs="*", help="embedding files in word2vec text format")
    r.add_argument("--labels", help="CSV node,label attached to each projected row")
    r.add_argument("--report", help="report directory or report.json to summarise")
    r.add_argument("-o", "--output", required=True, help="output directory")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"netembed {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NetEmbedError, OSError, RuntimeError) as exc:
        print(f"netembed {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
