"""Predictability / computability / stability harness.

An :class:`ExperimentPlan` names the methods, the dimension grid, the number
of replications and the downstream tasks.  :class:`Experiment` runs the plan
on a fixed graph: every replication reseeds walks, initialisation and CV
splits, and each (method, dimension, replication) unit is single-threaded and
keyed only by ``(base seed, replication)``.  Units may run in a thread pool;
results are assembled serially in a fixed order, so the pool size never
changes a reported number.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import platform
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from ._rng import derive_seed
from .downstream import (
    DOWNSTREAM_MODELS,
    ari,
    auc,
    build_features,
    cross_validate,
    kmeans,
    link_split,
)
from .embed import METHOD_NAMES, METHODS, SIMILARITY_KINDS, TrainConfig, embed_graph
from .embed.base import column_signs, pair_scores, procrustes_distance
from .errors import NetEmbedError
from .graph import Graph, NodeMetadata, largest_connected_component, perturb

TASKS = ("node_classification", "link_prediction", "clustering")
PERTURB_MODES = ("remove_edges", "flip_pairs")
ROW_COLUMNS = ("method", "dim", "task", "model", "metric", "mean", "q025", "q975", "R",
               "seed", "status")
STABILITY_COLUMNS = ("method", "dim", "axis", "perturbation", "fraction", "model", "metric",
                     "mean", "q025", "q975", "R", "seed", "status")
STAGES = ("walk", "train", "eval")

# failures of a single unit that are recorded instead of aborting the run
_RECOVERABLE = (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError)


def quantile_band(samples, lo: float = 0.025, hi: float = 0.975):
    """(low quantile, mean, high quantile).

    Quantiles interpolate linearly between order statistics with the
    inclusive convention: position ``q * (m - 1)`` in the sorted sample.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise NetEmbedError("quantile_band needs at least one sample")
    if not 0.0 <= lo <= hi <= 1.0:
        raise NetEmbedError(f"need 0 <= lo <= hi <= 1, got {lo}, {hi}")
    low, high = np.quantile(x, [lo, hi], method="linear")
    mean = float(x.mean())
    # the mean of a nearly constant sample can land an ulp outside the band
    return float(min(low, mean)), mean, float(max(high, mean))


def pca_project(embedding, out_dim: int = 2):
    """Scores on the leading principal components and their explained variances.

    Columns are centred first; each component's sign makes its first
    clearly nonzero score positive.
    """
    Z = np.asarray(embedding, dtype=np.float64)
    if Z.ndim != 2:
        raise NetEmbedError("embedding must be a 2-D matrix")
    if not 1 <= out_dim <= Z.shape[1]:
        raise NetEmbedError(f"out_dim must lie in 1..{Z.shape[1]}, got {out_dim}")
    Zc = Z - Z.mean(axis=0)
    U, S, _ = np.linalg.svd(Zc, full_matrices=False)
    scores = U[:, :out_dim] * S[:out_dim]
    scores = scores * column_signs(scores)
    denom = max(Z.shape[0] - 1, 1)
    return scores, (S[:out_dim] ** 2) / denom


# --------------------------------------------------------------------- plan

@dataclass(frozen=True)
class ExperimentPlan:
    """What to run.  ``method_configs`` maps a method to TrainConfig overrides."""

    methods: Tuple[str, ...] = ("deepwalk", "spectral")
    dims: Tuple[int, ...] = (16,)
    replications: int = 20
    folds: int = 5
    models: Tuple[str, ...] = ("logistic", "random_forest")
    tasks: Tuple[str, ...] = ("node_classification", "clustering")
    perturbations: Tuple[Tuple[str, float], ...] = ()
    seed: int = 0
    method_configs: Dict[str, dict] = field(default_factory=dict)
    link_test_fraction: float = 0.1
    link_neg_ratio: float = 1.0
    similarity: str = "dot"
    use_covariates: bool = True
    standardize: bool = True
    resample_splits: bool = True
    perturbation_deltas: bool = True
    forest_trees: int = 100
    logistic_l2: float = 1e-3
    kmeans_restarts: int = 10

    def __post_init__(self):
        for name in ("methods", "dims", "models", "tasks"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "perturbations",
                           tuple((str(m), float(f)) for m, f in self.perturbations))
        object.__setattr__(self, "method_configs",
                           {k: dict(v) for k, v in dict(self.method_configs).items()})
        if not self.methods:
            raise NetEmbedError("plan needs at least one method")
        if not self.tasks:
            raise NetEmbedError("plan needs at least one task")
        for m in self.methods:
            if m not in METHODS:
                raise NetEmbedError(f"unknown method {m!r}; valid: {', '.join(METHOD_NAMES)}")
        for t in self.tasks:
            if t not in TASKS:
                raise NetEmbedError(f"unknown task {t!r}; valid: {', '.join(TASKS)}")
        for m in self.models:
            if m not in DOWNSTREAM_MODELS:
                raise NetEmbedError(f"unknown model {m!r}; valid: {', '.join(DOWNSTREAM_MODELS)}")
        if "node_classification" in self.tasks and not self.models:
            raise NetEmbedError("node_classification needs at least one downstream model")
        if self.replications < 1:
            raise NetEmbedError("replications must be >= 1")
        if self.folds < 2:
            raise NetEmbedError("folds must be >= 2")
        if not self.dims or any(int(d) < 1 for d in self.dims):
            raise NetEmbedError("dims must be a nonempty list of positive integers")
        for mode, frac in self.perturbations:
            if mode not in PERTURB_MODES:
                raise NetEmbedError(f"unknown perturbation {mode!r}; valid: {', '.join(PERTURB_MODES)}")
            if not 0.0 <= frac <= 1.0:
                raise NetEmbedError(f"perturbation fraction must lie in [0, 1], got {frac}")
        for m, overrides in self.method_configs.items():
            if m not in METHODS:
                raise NetEmbedError(f"config given for unknown method {m!r}")
            self.train_config(m, 1)
        if self.similarity not in SIMILARITY_KINDS:
            raise NetEmbedError(f"unknown similarity {self.similarity!r}")
        if not 0.0 < self.link_test_fraction < 1.0:
            raise NetEmbedError("link_test_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise NetEmbedError("seed must be non-negative")
        if self.forest_trees < 1 or self.kmeans_restarts < 1 or self.logistic_l2 < 0:
            raise NetEmbedError("forest_trees and kmeans_restarts must be positive, logistic_l2 >= 0")

    def train_config(self, method: str, dim: int) -> TrainConfig:
        overrides = dict(self.method_configs.get(method, {}))
        overrides["dim"] = int(dim)
        try:
            return TrainConfig(**overrides)
        except TypeError as exc:
            raise NetEmbedError(f"bad config for {method}: {exc}") from None

    def replication_seed(self, r: int) -> int:
        return derive_seed(self.seed, "replication", r)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["perturbations"] = [list(p) for p in self.perturbations]
        for k in ("methods", "dims", "models", "tasks"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise NetEmbedError(f"unknown plan keys: {', '.join(unknown)}")
        return cls(**d)


# ------------------------------------------------------------------- units

@dataclass
class UnitResult:
    method: str
    dim: int
    rep: int
    values: Dict[tuple, float] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    center: Optional[np.ndarray] = None


def _describe(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


@dataclass
class PcsReport:
    plan: ExperimentPlan
    rows: Dict[str, List[dict]] = field(default_factory=dict)
    stability: List[dict] = field(default_factory=list)
    timings: List[dict] = field(default_factory=list)
    rankings: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    config: Optional[dict] = None

    def csv_text(self, task: str) -> str:
        return _csv_text(ROW_COLUMNS, self.rows.get(task, []))

    def stability_csv_text(self) -> str:
        return _csv_text(STABILITY_COLUMNS, self.stability)

    def to_json(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "config": self.config,
            "provenance": self.provenance,
            "timings": self.timings,
            "rankings": self.rankings,
            "rows": self.rows,
            "stability": self.stability,
        }

    def write(self, out_dir: str) -> List[str]:
        """Write one CSV per task, ``stability.csv`` and ``report.json``."""
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for task in self.rows:
            written.append(atomic_write(os.path.join(out_dir, f"{task}.csv"), self.csv_text(task)))
        if self.stability:
            written.append(atomic_write(os.path.join(out_dir, "stability.csv"),
                                        self.stability_csv_text()))
        text = json.dumps(_jsonable(self.to_json()), indent=2, sort_keys=True, allow_nan=True)
        written.append(atomic_write(os.path.join(out_dir, "report.json"), text + "\n"))
        return written


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def atomic_write(path: str, text: str) -> str:
    """Write ``text`` to a temporary sibling, then rename it over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def environment_fingerprint() -> dict:
    """Machine and interpreter description plus a short digest of it."""
    info = {
        "python": platform.python_version(),
        "implementation": platform.python_implementation(),
        "system": platform.system(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "kernel_backend": _kernels.BACKEND,
    }
    blob = json.dumps(info, sort_keys=True).encode()
    info["digest"] = hashlib.sha256(blob).hexdigest()[:16]
    return info


class Experiment:
    """Runs one plan on one graph.  ``threads`` sizes the replication pool."""

    def __init__(self, plan: ExperimentPlan, graph: Graph, meta: Optional[NodeMetadata] = None,
                 threads: int = 1):
        if threads < 1:
            raise NetEmbedError("threads must be >= 1")
        needs_labels = {"node_classification", "clustering"} & set(plan.tasks)
        if needs_labels and (meta is None or meta.labels is None):
            raise NetEmbedError(f"tasks {', '.join(sorted(needs_labels))} need node labels")
        if meta is not None:
            meta.check_size(graph.n)
        self.plan = plan
        self.graph = graph
        self.meta = meta
        self.threads = threads
        self._units: Dict[tuple, UnitResult] = {}

    # -- helpers
    def _map(self, fn, items):
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]

    def _embed_seed(self, method, dim, r):
        return derive_seed(self.plan.replication_seed(r), "embed", method, int(dim))

    def _split_seed(self, r, what):
        base = self.plan.replication_seed(r) if self.plan.resample_splits else self.plan.seed
        return derive_seed(base, "split", what)

    def _embed(self, g, method, dim, seed):
        cfg = self.plan.train_config(method, dim)
        return embed_graph(g, method, cfg, seed=seed, threads=1)

    def _evaluate(self, Z, meta, r, out: UnitResult, tag=""):
        """Node-level tasks on embedding ``Z``; fills ``out.values``."""
        plan = self.plan
        if "node_classification" in plan.tasks:
            feats = build_features(Z, meta, plan.use_covariates)
            for model in plan.models:
                args = ({"l2": plan.logistic_l2} if model == "logistic"
                        else {"trees": plan.forest_trees})
                try:
                    res = cross_validate(feats, meta.labels, model, plan.folds,
                                         self._split_seed(r, "cv"), plan.standardize, args)
                except _RECOVERABLE as exc:
                    out.errors[f"node_classification/{model}{tag}"] = _describe(exc)
                    continue
                out.values[("node_classification", model, "accuracy")] = res["accuracy"]
                out.values[("node_classification", model, "macro_f1")] = res["macro_f1"]
        if "clustering" in plan.tasks:
            k = meta.num_classes
            try:
                km = kmeans(Z, k, self._split_seed(r, "kmeans"), restarts=plan.kmeans_restarts)
                out.values[("clustering", "kmeans", "ari")] = ari(km.labels, meta.labels)
            except _RECOVERABLE as exc:
                out.errors[f"clustering{tag}"] = _describe(exc)

    def _unit(self, key) -> UnitResult:
        method, dim, r = key
        out = UnitResult(method, dim, r)
        seed = self._embed_seed(method, dim, r)
        node_tasks = {"node_classification", "clustering"} & set(self.plan.tasks)
        try:
            emb = self._embed(self.graph, method, dim, seed)
            out.center = emb.center
            out.timings.update(emb.info["timings"])
        except _RECOVERABLE as exc:
            out.errors["embed"] = _describe(exc)
        t0 = time.perf_counter()
        if out.center is not None and node_tasks:
            self._evaluate(out.center, self.meta, r, out)
        if "link_prediction" in self.plan.tasks:
            self._link_prediction(method, dim, r, seed, out)
        out.timings["eval"] = time.perf_counter() - t0
        return out

    def _link_prediction(self, method, dim, r, seed, out):
        plan = self.plan
        try:
            split = link_split(self.graph, plan.link_test_fraction, plan.link_neg_ratio,
                               self._split_seed(r, "link"))
            emb = self._embed(split.train, method, dim, seed)
            pairs = np.vstack([split.positives, split.negatives])
            labels = np.r_[np.ones(len(split.positives)), np.zeros(len(split.negatives))]
            scores = pair_scores(emb.center, pairs, plan.similarity)
            out.values[("link_prediction", plan.similarity, "auc")] = auc(scores, labels)
        except _RECOVERABLE as exc:
            out.errors["link_prediction"] = _describe(exc)

    def units(self) -> Dict[tuple, UnitResult]:
        """Run (or reuse) every (method, dim, replication) unit."""
        plan = self.plan
        keys = [(m, int(d), r) for m in plan.methods for d in plan.dims
                for r in range(plan.replications)]
        todo = [k for k in keys if k not in self._units]
        for k, res in zip(todo, self._map(self._unit, todo)):
            self._units[k] = res
        return {k: self._units[k] for k in keys}

    # -- predictability
    def _metric_keys(self):
        plan = self.plan
        keys = []
        for task in plan.tasks:
            if task == "node_classification":
                keys += [(task, m, metric) for m in plan.models for metric in ("accuracy", "macro_f1")]
            elif task == "clustering":
                keys.append((task, "kmeans", "ari"))
            else:
                keys.append((task, plan.similarity, "auc"))
        return keys

    def _error_for(self, unit: UnitResult, task, model):
        for k in ("embed", f"{task}/{model}", task):
            if k in unit.errors:
                return unit.errors[k]
        return "missing value"

    def predictability(self) -> Dict[str, List[dict]]:
        """Rows per task: band over replications for every metric."""
        plan = self.plan
        units = self.units()
        rows: Dict[str, List[dict]] = {t: [] for t in plan.tasks}
        for method in plan.methods:
            for dim in plan.dims:
                reps = [units[(method, int(dim), r)] for r in range(plan.replications)]
                for task, model, metric in self._metric_keys():
                    vals = [u.values[(task, model, metric)] for u in reps
                            if (task, model, metric) in u.values]
                    fails = [self._error_for(u, task, model) for u in reps
                             if (task, model, metric) not in u.values]
                    rows[task].append(_band_row(
                        dict(method=method, dim=int(dim), task=task, model=model, metric=metric),
                        vals, fails, plan))
        return rows

    # -- computability
    def computability(self, warmup: bool = True) -> List[dict]:
        """Per-stage wall-clock bands from R timed runs after a discarded warm-up.

        Stages: corpus generation (walk), training (train) and a k-means pass
        on the embedding (eval).  Runs are serial so timings do not compete.
        """
        plan = self.plan
        rows = []
        k = self.meta.num_classes if self.meta is not None and self.meta.labels is not None else 2
        for method in plan.methods:
            for dim in plan.dims:
                samples = {s: [] for s in STAGES}
                errors = []
                runs = range(-1 if warmup else 0, plan.replications)
                for r in runs:
                    seed = self._embed_seed(method, dim, max(r, 0))
                    try:
                        emb = self._embed(self.graph, method, dim, seed)
                        t0 = time.perf_counter()
                        kmeans(emb.center, min(k, self.graph.n), seed, restarts=1)
                        t_eval = time.perf_counter() - t0
                    except _RECOVERABLE as exc:
                        errors.append(_describe(exc))
                        continue
                    if r < 0:
                        continue
                    samples["walk"].append(emb.info["timings"]["walk"])
                    samples["train"].append(emb.info["timings"]["train"])
                    samples["eval"].append(t_eval)
                for stage in STAGES:
                    row = dict(method=method, dim=int(dim), stage=stage, threads=1,
                               runs=len(samples[stage]))
                    if samples[stage]:
                        lo, mean, hi = quantile_band(samples[stage])
                        row.update(mean=mean, q025=lo, q975=hi, status="ok")
                    else:
                        row.update(mean=float("nan"), q025=float("nan"), q975=float("nan"),
                                   status=errors[0] if errors else "no runs")
                    rows.append(row)
        return rows

    # -- stability
    def _perturbed_unit(self, key):
        method, dim, r, mode, frac = key
        base = self._units[(method, dim, r)]
        out = UnitResult(method, dim, r)
        if base.center is None:
            out.errors["embed"] = base.errors.get("embed", "base embedding failed")
            return out
        try:
            gp = perturb(self.graph, mode, frac, derive_seed(self.plan.replication_seed(r),
                                                              "perturb", mode, frac))
            gl, ml, kept = largest_connected_component(gp, self.meta, return_index=True)
            emb = self._embed(gl, method, dim, self._embed_seed(method, dim, r))
            out.center = emb.center
            out.values[("drift",)] = procrustes_distance(base.center[kept], emb.center)
        except _RECOVERABLE as exc:
            out.errors["embed"] = _describe(exc)
            return out
        if self.plan.perturbation_deltas and self.meta is not None and self.meta.labels is not None:
            node_tasks = {"node_classification", "clustering"} & set(self.plan.tasks)
            if node_tasks and ml.num_classes >= 2:
                self._evaluate(emb.center, ml, r, out, tag="")
        return out

    def stability(self) -> List[dict]:
        """Seed, data and dimension stability rows."""
        plan = self.plan
        units = self.units()
        rows = []
        metric_keys = [k for k in self._metric_keys()]

        def base_row(method, dim, axis, perturbation="", fraction=""):
            return dict(method=method, dim=dim, axis=axis, perturbation=perturbation,
                        fraction=fraction)

        # (a) reseeded runs on the fixed graph
        for method in plan.methods:
            for dim in plan.dims:
                reps = [units[(method, int(dim), r)] for r in range(plan.replications)]
                centers = [u.center for u in reps if u.center is not None]
                drifts = [procrustes_distance(centers[i], centers[j])
                          for i in range(len(centers)) for j in range(i + 1, len(centers))]
                fails = [u.errors.get("embed", "") for u in reps if u.center is None]
                row = base_row(method, int(dim), "seed")
                row.update(model="", metric="procrustes_drift")
                if len(centers) < 2:
                    fails = fails or ["need two replications for seed drift"]
                rows.append(_band_row(row, drifts, fails if not drifts else [], plan,
                                      count=len(centers)))
                for task, model, metric in metric_keys:
                    vals = [u.values[(task, model, metric)] for u in reps
                            if (task, model, metric) in u.values]
                    fails = [self._error_for(u, task, model) for u in reps
                             if (task, model, metric) not in u.values]
                    row = base_row(method, int(dim), "seed")
                    row.update(model=model, metric=f"{task}:{metric}")
                    rows.append(_band_row(row, vals, fails, plan))

        # (b) perturbed graphs against the unperturbed embedding
        if plan.perturbations:
            keys = [(m, int(d), r, mode, frac) for m in plan.methods for d in plan.dims
                    for mode, frac in plan.perturbations for r in range(plan.replications)]
            results = dict(zip(keys, self._map(self._perturbed_unit, keys)))
            for method in plan.methods:
                for dim in plan.dims:
                    for mode, frac in plan.perturbations:
                        pert = [results[(method, int(dim), r, mode, frac)]
                                for r in range(plan.replications)]
                        base = [units[(method, int(dim), r)] for r in range(plan.replications)]
                        row = base_row(method, int(dim), "data", mode, frac)
                        row.update(model="", metric="procrustes_drift")
                        vals = [u.values[("drift",)] for u in pert if ("drift",) in u.values]
                        fails = [u.errors.get("embed", "missing value") for u in pert
                                 if ("drift",) not in u.values]
                        rows.append(_band_row(row, vals, fails, plan))
                        if not plan.perturbation_deltas:
                            continue
                        for task, model, metric in metric_keys:
                            if task == "link_prediction":
                                continue
                            key = (task, model, metric)
                            deltas = [p.values[key] - b.values[key] for p, b in zip(pert, base)
                                      if key in p.values and key in b.values]
                            fails = [self._error_for(p if key not in p.values else b, task, model)
                                     for p, b in zip(pert, base)
                                     if key not in p.values or key not in b.values]
                            row = base_row(method, int(dim), "data", mode, frac)
                            row.update(model=model, metric=f"{task}:{metric}:delta")
                            rows.append(_band_row(row, deltas, fails, plan))

        # (c) spread of each metric across the dimension grid, per replication
        if len(plan.dims) > 1:
            for method in plan.methods:
                for task, model, metric in metric_keys:
                    spreads, fails = [], []
                    for r in range(plan.replications):
                        vals = [units[(method, int(d), r)].values.get((task, model, metric))
                                for d in plan.dims]
                        if any(v is None for v in vals):
                            fails.append("metric missing for some dimension")
                            continue
                        spreads.append(max(vals) - min(vals))
                    row = base_row(method, "all", "dimension")
                    row.update(model=model, metric=f"{task}:{metric}:range")
                    rows.append(_band_row(row, spreads, fails, plan))
        return rows

    # -- assembly
    def rankings(self, rows: Dict[str, List[dict]]) -> dict:
        """Method order by mean metric, separately per task, model, metric and dim."""
        out: dict = {}
        for task, task_rows in rows.items():
            groups: Dict[tuple, list] = {}
            for row in task_rows:
                groups.setdefault((row["model"], row["metric"], row["dim"]), []).append(row)
            for (model, metric, dim), grp in sorted(groups.items(), key=lambda kv: tuple(map(str, kv[0]))):
                ok = [g for g in grp if np.isfinite(g["mean"])]
                ok.sort(key=lambda g: (-g["mean"], g["method"]))
                out.setdefault(task, {}).setdefault(model, {}).setdefault(metric, {})[str(dim)] = [
                    {"method": g["method"], "mean": g["mean"], "q025": g["q025"],
                     "q975": g["q975"]} for g in ok]
        return out

    def provenance(self) -> dict:
        plan = self.plan
        return {
            "base_seed": plan.seed,
            "replication_seeds": [plan.replication_seed(r) for r in range(plan.replications)],
            "train_configs": {m: {str(d): plan.train_config(m, d).to_dict() for d in plan.dims}
                              for m in plan.methods},
            "graph": {"n": self.graph.n, "edges": self.graph.num_edges,
                      "directed": self.graph.directed},
            "harness_threads": self.threads,
            "environment": environment_fingerprint(),
        }

    def run(self, predictability=True, computability=True, stability=True,
            config: Optional[dict] = None) -> PcsReport:
        rows = self.predictability() if predictability else {}
        report = PcsReport(self.plan, rows=rows, config=config)
        if stability:
            report.stability = self.stability()
        if computability:
            report.timings = self.computability()
        report.rankings = self.rankings(rows)
        report.provenance = self.provenance()
        return report


def _band_row(row: dict, values: Sequence[float], failures: Sequence[str], plan: ExperimentPlan,
              count: Optional[int] = None) -> dict:
    total = len(values) + len(failures)
    if values:
        lo, mean, hi = quantile_band(values)
    else:
        lo = mean = hi = float("nan")
    if not failures:
        status = "ok"
    elif values:
        status = f"partial {len(failures)}/{total} failed: {failures[0]}"
    else:
        status = f"failed: {failures[0]}"
    row.update(mean=mean, q025=lo, q975=hi, R=count if count is not None else len(values),
               seed=plan.seed, status=status)
    return row


def run_predictability(plan: ExperimentPlan, graph: Graph, meta: Optional[NodeMetadata] = None,
                       threads: int = 1) -> Dict[str, List[dict]]:
    return Experiment(plan, graph, meta, threads).predictability()


def run_computability(plan: ExperimentPlan, graph: Graph, meta: Optional[NodeMetadata] = None,
                      warmup: bool = True) -> List[dict]:
    return Experiment(plan, graph, meta, 1).computability(warmup)


def run_stability(plan: ExperimentPlan, graph: Graph, meta: Optional[NodeMetadata] = None,
                  threads: int = 1) -> List[dict]:
    if not plan.perturbations and plan.replications < 2 and len(plan.dims) < 2:
        raise NetEmbedError("stability needs perturbations, R >= 2 or several dimensions")
    return Experiment(plan, graph, meta, threads).stability()


def summary_table(rows: Dict[str, List[dict]]) -> str:
    """Plain-text table of every predictability row, grouped by task."""
    header = ("method", "dim", "task", "model", "metric", "mean", "q025", "q975", "R", "status")
    lines = [header]
    for task in rows:
        for row in rows[task]:
            lines.append(tuple(
                ("%.4f" % row[c]) if isinstance(row[c], float) else str(row[c]) for c in header))
    widths = [max(len(l[i]) for l in lines) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(l, widths)).rstrip() for l in lines) + "\n"
