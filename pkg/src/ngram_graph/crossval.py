"""K-fold evaluation of embedding + linear-model pipelines.

When the vertex embedding is trained, it is trained inside each training
fold only; the trained matrix remembers which rows it saw and refuses to
score rows it was trained on. Random embeddings are label-free and shared
across folds. Features can be exported to CSV/binary with a manifest
sufficient to reproduce them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import matrixio
from .cbow import CbowConfig, train_on_graphs
from .linear import DegenerateLabels, compute_metric, fit
from .ngram import embed_corpus, feature_column_names
from .schema import AttributeSchema
from .vertex import VertexEmbeddingMatrix, random_embedding

LAMBDA_GRID = tuple(10.0 ** e for e in range(-4, 2))  # 1e-4 .. 1e1


class LeakageError(RuntimeError):
    """A fold tried to score rows its embedding was trained on."""


@dataclass(frozen=True)
class PipelineConfig:
    embedding: str = "random-gaussian"  # random-gaussian | random-rademacher | trained
    r: int = 100
    T: int = 6
    variant: str = "walk"
    normalization: str = "unit-l2"
    level_scale: str = "none"
    cbow: CbowConfig | None = None
    task: str = "logistic"
    penalty: str = "squared-l2"
    lam: float | None = None  # None selects from LAMBDA_GRID by inner CV
    metric: str = "roc-auc"
    seed: int = 0


@dataclass
class EvalReport:
    metric: str
    fold_values: list
    task: str = "logistic"

    @property
    def values(self) -> list:
        return [v for v in self.fold_values if v is not None]

    @property
    def mean(self) -> float | None:
        vals = self.values
        return float(np.mean(vals)) if vals else None

    @property
    def std(self) -> float | None:
        vals = self.values
        return float(np.std(vals)) if vals else None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "task": self.task,
            "fold_values": self.fold_values,
            "mean": self.mean,
            "std": self.std,
        }

    def __str__(self) -> str:
        folds = ", ".join(
            "absent" if v is None else f"{v:.4f}" for v in self.fold_values
        )
        mean = "absent" if self.mean is None else f"{self.mean:.4f}"
        return f"{self.metric}: mean={mean} folds=[{folds}]"


def _higher_is_better(metric: str) -> bool:
    return metric.lower() in ("roc-auc", "pr-auc")


def fold_indices(n: int, folds: int, seed: int, labels=None, stratified: bool = False):
    """Deterministic fold assignment; stratification deals classes round-robin."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"cannot split {n} samples into {folds} folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=np.int64)
    if stratified and labels is not None:
        labels = np.asarray(labels)
        pos = 0
        for cls in np.unique(labels):
            members = np.nonzero(labels == cls)[0]
            members = members[rng.permutation(members.size)]
            for i, idx in enumerate(members):
                assign[idx] = (pos + i) % folds
            pos += members.size
    else:
        order = rng.permutation(n)
        for fold, chunk in enumerate(np.array_split(order, folds)):
            assign[chunk] = fold
    return [
        (np.nonzero(assign != f)[0], np.nonzero(assign == f)[0]) for f in range(folds)
    ]


def _select_lambda(X, y, task, penalty, metric, seed) -> float:
    """3-fold inner search over LAMBDA_GRID; falls back to 1e-3 when tiny."""
    classes = np.unique(y)
    if X.shape[0] < 6 or (task == "logistic" and classes.size < 2):
        return 1e-3
    best_lam, best_score = None, None
    sign = 1.0 if _higher_is_better(metric) else -1.0
    splits = fold_indices(X.shape[0], 3, seed, labels=y, stratified=task == "logistic")
    for lam in LAMBDA_GRID:
        scores = []
        for tr, te in splits:
            try:
                model = fit(X[tr], y[tr], task=task, lam=lam, penalty=penalty,
                            max_iter=300)
            except DegenerateLabels:
                continue
            val = compute_metric(metric, y[te], model.decision(X[te]))
            if val is not None:
                scores.append(val)
        if not scores:
            continue
        mean = float(np.mean(scores))
        if best_score is None or sign * mean > sign * best_score:
            best_score, best_lam = mean, lam
    return best_lam if best_lam is not None else 1e-3


def kfold_features(
    X,
    y,
    task: str = "logistic",
    metric: str = "roc-auc",
    folds: int = 5,
    seed: int = 0,
    lam: float | None = None,
    penalty: str = "squared-l2",
    stratified: bool = False,
    max_iter: int = 2000,
) -> EvalReport:
    """Cross-validate a linear model on a fixed feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    values = []
    for tr, te in fold_indices(X.shape[0], folds, seed, labels=y, stratified=stratified):
        fold_lam = lam if lam is not None else _select_lambda(
            X[tr], y[tr], task, penalty, metric, seed
        )
        try:
            model = fit(X[tr], y[tr], task=task, lam=fold_lam, penalty=penalty,
                        max_iter=max_iter)
        except DegenerateLabels:
            values.append(None)
            continue
        values.append(compute_metric(metric, y[te], model.decision(X[te])))
    return EvalReport(metric=metric, fold_values=values, task=task)


def _fold_embedding(graphs, train_idx, schema, cfg: PipelineConfig, fold: int):
    if cfg.embedding == "trained":
        cbow_cfg = cfg.cbow or CbowConfig(r=cfg.r, seed=cfg.seed + fold)
        emb, _ = train_on_graphs(
            [graphs[i] for i in train_idx],
            schema,
            cbow_cfg,
            dataset_id=f"cv-fold-{fold}",
        )
        prov = dict(emb.provenance)
        prov["train_rows"] = sorted(int(i) for i in train_idx)
        return VertexEmbeddingMatrix(matrix=emb.matrix, schema=schema, provenance=prov)
    if cfg.embedding in ("random-gaussian", "random-rademacher"):
        dist = cfg.embedding.split("-", 1)[1]
        return random_embedding(schema, cfg.r, dist=dist, seed=cfg.seed)
    raise ValueError(f"unknown embedding source {cfg.embedding!r}")


def _check_no_leakage(emb: VertexEmbeddingMatrix, test_idx) -> None:
    trained_on = emb.provenance.get("train_rows")
    if emb.provenance.get("kind") == "trained" and trained_on is not None:
        overlap = set(trained_on) & {int(i) for i in test_idx}
        if overlap:
            raise LeakageError(
                f"embedding was trained on test rows {sorted(overlap)[:5]}"
            )


def kfold_cv(
    graphs,
    labels,
    schema: AttributeSchema,
    cfg: PipelineConfig | None = None,
    folds: int = 5,
    seed: int = 0,
    stratified: bool = False,
) -> EvalReport:
    """End-to-end cross-validation: embed within folds, fit, score."""
    cfg = cfg or PipelineConfig()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if y.size != len(graphs):
        raise ValueError("labels must align with graphs")
    values = []
    splits = fold_indices(len(graphs), folds, seed, labels=y, stratified=stratified)
    for fold, (tr, te) in enumerate(splits):
        emb = _fold_embedding(graphs, tr, schema, cfg, fold)
        _check_no_leakage(emb, te)
        X_tr, _ = embed_corpus(
            [graphs[i] for i in tr], emb, cfg.T,
            variant=cfg.variant, level_scale=cfg.level_scale,
            normalization=cfg.normalization,
        )
        X_te, _ = embed_corpus(
            [graphs[i] for i in te], emb, cfg.T,
            variant=cfg.variant, level_scale=cfg.level_scale,
            normalization=cfg.normalization,
        )
        lam = cfg.lam if cfg.lam is not None else _select_lambda(
            X_tr, y[tr], cfg.task, cfg.penalty, cfg.metric, seed
        )
        try:
            model = fit(X_tr, y[tr], task=cfg.task, lam=lam, penalty=cfg.penalty)
        except DegenerateLabels:
            values.append(None)
            continue
        values.append(compute_metric(cfg.metric, y[te], model.decision(X_te)))
    return EvalReport(metric=cfg.metric, fold_values=values, task=cfg.task)


# -- feature export ---------------------------------------------------------------


def manifest_hash(manifest: dict) -> str:
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def export_features(matrix, manifest: dict, base_path, formats=("bin", "csv")) -> dict:
    """Write the feature matrix next to its manifest; returns written paths."""
    base = Path(base_path)
    matrix = np.asarray(matrix, dtype=np.float64)
    paths = {}
    if "bin" in formats:
        p = base.with_suffix(".nggm")
        matrixio.write_matrix(p, matrix, meta={"manifest": manifest})
        paths["bin"] = p
    if "csv" in formats:
        p = base.with_suffix(".csv")
        T, r = int(manifest["T"]), int(manifest["r"])
        header = ["g_id"] + feature_column_names(T, r)
        matrixio.write_csv(p, matrix, header=header, row_ids=manifest.get("ids"))
        paths["csv"] = p
    mp = base.parent / (base.name + ".manifest.json")
    mp.write_text(json.dumps(manifest, sort_keys=True, indent=2), encoding="utf-8")
    paths["manifest"] = mp
    return paths


def load_features(path):
    """Read a binary feature file back into (matrix, manifest)."""
    matrix, meta = matrixio.read_matrix(path)
    return matrix, meta.get("manifest", {})
