"""Command-line pipeline: featurize, embed, check, recover, fit, evaluate.

Every artifact gets a manifest (command, parameters, seed, input hashes)
sufficient to regenerate it bit-identically. Exit codes: 0 success,
1 numeric or validation failure, 2 I/O or parse failure.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .cbow import CbowConfig, TrainingDiverged, train_on_graphs
from .crossval import (
    LeakageError,
    PipelineConfig,
    export_features,
    kfold_cv,
    kfold_features,
    load_features,
    manifest_hash,
)
from .featurize import FeaturizerConfig, featurize
from .graph import GraphError, read_json_graphs, validate_graph, write_jsonl
from .linear import DegenerateLabels, LinearModel, compute_metric, fit as fit_linear
from .matrixio import MatrixFormatError
from .ngram import GraphTooLarge, embed_corpus, graph_embed, oracle_embed
from .recovery import (
    RecoveryConfig,
    recovery_experiment,
    summarize_cells,
    write_cells_csv,
)
from .schema import BUNDLED_SCHEMAS, SchemaError
from .sdf import parse_sdf
from .vertex import EmbeddingError, load_embedding, save_embedding


class CheckFailed(RuntimeError):
    """A verification command found a mismatch."""


class ValidationFailure(ValueError):
    """Input graphs failed invariant validation."""


class NoInputGraphs(OSError):
    """Input produced zero usable graphs."""


_PARSE_ERRORS = (OSError, UnicodeDecodeError, json.JSONDecodeError, MatrixFormatError,
                 GraphError, click.UsageError)
_NUMERIC_ERRORS = (SchemaError, EmbeddingError, GraphTooLarge, TrainingDiverged,
                   DegenerateLabels, LeakageError, CheckFailed, ValueError,
                   ArithmeticError)


def _seed_default() -> int:
    return int(os.environ.get("NGG_SEED", "0"))


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _merge_config(ctx: click.Context, config_path) -> None:
    """Fill parameters from a JSON config; explicit flags always win."""
    if not config_path:
        return
    doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    alias = {}
    for param in ctx.command.params:
        alias[param.name] = param.name
        for opt in list(param.opts) + list(param.secondary_opts):
            alias[opt.lstrip("-").replace("-", "_")] = param.name
    for key, value in doc.items():
        name = alias.get(key.replace("-", "_"))
        if name is None:
            raise click.UsageError(f"unknown config key {key!r}")
        src = ctx.get_parameter_source(name)
        if src in (click.core.ParameterSource.DEFAULT,
                   click.core.ParameterSource.DEFAULT_MAP):
            ctx.params[name] = value


def _manifest(command: str, params: dict, inputs: dict) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": params.get("seed"),
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()
        },
    }


def _write_sidecar(out_path, manifest: dict) -> None:
    side = Path(str(out_path) + ".manifest.json")
    side.write_text(json.dumps(manifest, sort_keys=True, indent=2), encoding="utf-8")


def _load_graphs(path, schema):
    text = Path(path).read_text(encoding="utf-8")
    graphs, errors = read_json_graphs(text, schema, strict=False)
    if errors:
        detail = "; ".join(f"document {pos}: {msg}" for pos, msg in errors[:5])
        raise ValidationFailure(f"{path}: {detail}")
    return graphs


def _schema_by_key(key: str):
    if key not in BUNDLED_SCHEMAS:
        raise click.UsageError(f"--schema must be one of {sorted(BUNDLED_SCHEMAS)}")
    return BUNDLED_SCHEMAS[key]


def _resolve_schema(schema_key, manifest=None, embedding=None):
    """Prefer the schema travelling with an artifact over the bundled choice."""
    if embedding is not None:
        return embedding.schema
    if manifest and "schema" in manifest:
        from .schema import AttributeSchema

        return AttributeSchema.from_dict(manifest["schema"])
    return _schema_by_key(schema_key)


@click.group()
def cli():
    """Walk-embedding pipeline for attributed molecular graphs."""


# -- featurize -----------------------------------------------------------------


@cli.command("featurize")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", "schema_key", default="full", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def featurize_cmd(ctx, input_path, out, schema_key, config_path):
    """Parse .sdf/.mol or .json/.jsonl into a validated graph corpus."""
    _merge_config(ctx, config_path)
    schema_key = ctx.params["schema_key"]
    cfg = FeaturizerConfig(schema_key=schema_key)
    schema = cfg.schema
    suffix = Path(input_path).suffix.lower()
    if suffix in (".smi", ".smiles"):
        raise click.UsageError(
            "SMILES input is not supported; provide SDF/MOL or JSON graphs"
        )

    failed = 0
    graphs = []
    if suffix in (".json", ".jsonl"):
        graphs, errors = read_json_graphs(
            Path(input_path).read_text(encoding="utf-8"), schema, strict=False
        )
        failed = len(errors)
        for pos, msg in errors:
            click.echo(f"document {pos}: {msg}", err=True)
    else:
        records, parse_errors = parse_sdf(Path(input_path).read_bytes())
        failed = len(parse_errors)
        for err in parse_errors:
            click.echo(str(err), err=True)
        for rec in records:
            g, warnings = featurize(rec, cfg)
            for w in warnings:
                click.echo(f"{rec.name or 'record'}: {w}", err=True)
            graphs.append(g)

    if not graphs:
        raise NoInputGraphs(f"no graphs parsed from {input_path}")

    with open(out, "w", encoding="utf-8") as fh:
        write_jsonl(graphs, schema, fh)
    sizes = np.array([g.num_vertices for g in graphs])
    click.echo(
        f"parsed={len(graphs)} failed={failed} "
        f"vertices min/mean/max={sizes.min()}/{sizes.mean():.1f}/{sizes.max()}",
        err=True,
    )
    # featurize draws no randomness, but manifests always carry the
    # materialized seed
    _write_sidecar(out, _manifest(
        "featurize",
        {"schema": schema_key, "seed": _seed_default()},
        {"input": input_path},
    ))


# -- train-vertex ----------------------------------------------------------------


@cli.command("train-vertex")
@click.argument("graphs_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", "schema_key", default="full", show_default=True)
@click.option("--r", default=100, show_default=True)
@click.option("--aggregator", default="sum", show_default=True,
              type=click.Choice(["sum", "mean"]))
@click.option("--hidden", default="100", show_default=True,
              help="comma-separated hidden layer sizes")
@click.option("--epochs", default=100, show_default=True)
@click.option("--batch-size", default=256, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def train_vertex_cmd(ctx, graphs_path, out, schema_key, r, aggregator, hidden,
                     epochs, batch_size, lr, seed, config_path):
    """Train the vertex embedding matrix on neighbor contexts."""
    _merge_config(ctx, config_path)
    p = ctx.params
    seed = p["seed"] if p["seed"] is not None else _seed_default()
    schema = _schema_by_key(p["schema_key"])
    graphs = _load_graphs(graphs_path, schema)
    hidden_sizes = tuple(int(h) for h in str(p["hidden"]).split(",") if h)
    cfg = CbowConfig(
        r=int(p["r"]), aggregator=p["aggregator"], hidden=hidden_sizes,
        epochs=int(p["epochs"]), batch_size=int(p["batch_size"]),
        learning_rate=float(p["lr"]), seed=seed,
    )
    emb, report = train_on_graphs(graphs, schema, cfg,
                                  dataset_id=Path(graphs_path).name)
    save_embedding(out, emb)
    if report.mean_accuracy is not None:
        click.echo(f"held-out mean attribute accuracy: {report.mean_accuracy:.4f}",
                   err=True)
        for name, acc in report.holdout_accuracy.items():
            click.echo(f"  {name}: {acc:.4f}", err=True)
    if report.epoch_losses:
        click.echo(f"final epoch loss: {report.epoch_losses[-1]:.6f}", err=True)
    _write_sidecar(out, _manifest(
        "train-vertex",
        {"schema": p["schema_key"], "r": cfg.r, "aggregator": cfg.aggregator,
         "hidden": list(hidden_sizes), "epochs": cfg.epochs,
         "batch_size": cfg.batch_size, "lr": cfg.learning_rate, "seed": seed},
        {"graphs": graphs_path},
    ))


# -- embed -----------------------------------------------------------------------


@cli.command()
@click.argument("graphs_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--embedding", "embedding_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(),
              help="output base path; .nggm/.csv/.manifest.json are derived")
@click.option("--t", "--T", "t_steps", default=6, show_default=True)
@click.option("--variant", default="walk", show_default=True,
              type=click.Choice(["walk", "path", "vertex_path"]))
@click.option("--normalize/--no-normalize", default=False, show_default=True)
@click.option("--level-scale", default="none", show_default=True,
              type=click.Choice(["none", "factorial", "count"]))
@click.option("--csv/--no-csv", "want_csv", default=True, show_default=True)
@click.option("--jobs", default=1, show_default=True, help="worker process cap")
@click.option("--seed", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def embed(ctx, graphs_path, embedding_path, out, t_steps, variant, normalize,
          level_scale, want_csv, jobs, seed, config_path):
    """Embed a graph corpus into a feature matrix."""
    _merge_config(ctx, config_path)
    p = ctx.params
    seed = p["seed"] if p["seed"] is not None else _seed_default()
    emb = load_embedding(p["embedding_path"])
    graphs = _load_graphs(graphs_path, emb.schema)
    normalization = "unit-l2" if p["normalize"] else "none"
    matrix, manifest = embed_corpus(
        graphs, emb, int(p["t_steps"]),
        variant=p["variant"], level_scale=p["level_scale"],
        normalization=normalization, seed=seed, jobs=int(p["jobs"]),
    )
    if manifest["errors"]:
        for row, msg in manifest["errors"].items():
            click.echo(f"row {row}: {msg}", err=True)
    run = _manifest(
        "embed",
        {"T": int(p["t_steps"]), "variant": p["variant"],
         "normalization": normalization, "level_scale": p["level_scale"],
         "seed": seed},
        {"graphs": graphs_path, "embedding": p["embedding_path"]},
    )
    manifest["run"] = run
    formats = ("bin", "csv") if p["want_csv"] else ("bin",)
    paths = export_features(matrix, manifest, out, formats=formats)
    click.echo(f"embedded {matrix.shape[0]} graphs -> {paths['bin']}", err=True)


# -- oracle-check ------------------------------------------------------------------


@cli.command("oracle-check")
@click.argument("graphs_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--embedding", "embedding_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--t", "--T", "t_steps", default=4, show_default=True)
@click.option("--cap", default=12, show_default=True)
@click.option("--tol", default=1e-10, show_default=True)
def oracle_check(graphs_path, embedding_path, t_steps, cap, tol):
    """Compare the recurrence against brute-force walk enumeration."""
    emb = load_embedding(embedding_path)
    graphs = _load_graphs(graphs_path, emb.schema)
    worst = 0.0
    for g in graphs:
        report = validate_graph(g, emb.schema)
        if not report.ok:
            raise CheckFailed(f"graph {g.graph_id!r} failed validation: {report}")
        fast = graph_embed(g, emb, t_steps).vector
        slow = oracle_embed(g, emb, t_steps, cap=cap).vector
        scale = max(float(np.max(np.abs(slow))), 1.0)
        worst = max(worst, float(np.max(np.abs(fast - slow))) / scale)
    click.echo(f"max relative residual over {len(graphs)} graphs: {worst:.3e}")
    if worst > tol:
        raise CheckFailed(f"residual {worst:.3e} exceeds tolerance {tol:.1e}")


# -- recover ------------------------------------------------------------------------


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON grid config; defaults to the bundled desk-scale grid")
@click.option("-o", "--out", default=None, type=click.Path(dir_okay=False))
@click.option("--jobs", default=1, show_default=True, help="worker process cap")
@click.option("--seed", default=None, type=int)
@click.pass_context
def recover(ctx, config_path, out, jobs, seed):
    """Monte-Carlo sparse-recovery success rates over an (r, k, n, s) grid."""
    if config_path:
        doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    else:
        doc = json.loads(
            importlib.resources.files("ngram_graph")
            .joinpath("data", "recovery_desk.json")
            .read_text(encoding="utf-8")
        )
    if seed is None:
        seed = doc.get("seed", _seed_default())
    doc["seed"] = seed
    cfg = RecoveryConfig.from_dict(doc)
    cells = recovery_experiment(cfg, jobs=jobs)
    click.echo(summarize_cells(cells))
    if out:
        write_cells_csv(out, cells)
        inputs = {"config": config_path} if config_path else {}
        _write_sidecar(out, _manifest("recover", {**doc, "seed": seed}, inputs))


# -- fit / eval ----------------------------------------------------------------------


def _labels_for(graphs):
    labels = []
    for g in graphs:
        if g.label is None:
            raise ValueError(f"graph {g.graph_id!r} has no label")
        labels.append(g.label)
    return np.asarray(labels, dtype=np.float64)


def _write_predictions(path, ids, scores) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("g_id,score\n")
        for gid, s in zip(ids, scores):
            fh.write(f"{gid},{repr(float(s))}\n")


@cli.command("fit")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--graphs", "graphs_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--schema", "schema_key", default="full", show_default=True)
@click.option("--task", default="logistic", show_default=True,
              type=click.Choice(["logistic", "least-squares"]))
@click.option("--lam", default=1e-3, show_default=True)
@click.option("--penalty", default="squared-l2", show_default=True,
              type=click.Choice(["squared-l2", "unsquared-l2"]))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--predictions", default=None, type=click.Path(dir_okay=False))
@click.option("--seed", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def fit_cmd(ctx, features_path, graphs_path, schema_key, task, lam, penalty, out,
            predictions, seed, config_path):
    """Fit the linear head on an exported feature matrix."""
    _merge_config(ctx, config_path)
    p = ctx.params
    schema_key, task, lam, penalty = (
        p["schema_key"], p["task"], p["lam"], p["penalty"]
    )
    X, manifest = load_features(features_path)
    schema = _resolve_schema(schema_key, manifest=manifest)
    graphs = _load_graphs(graphs_path, schema)
    if len(graphs) != X.shape[0]:
        raise ValueError(
            f"feature rows ({X.shape[0]}) do not match graphs ({len(graphs)})"
        )
    y = _labels_for(graphs)
    model = fit_linear(X, y, task=task, lam=lam, penalty=penalty)
    model.manifest_hash = manifest_hash(manifest) if manifest else None
    Path(out).write_text(model.to_json(), encoding="utf-8")
    click.echo(
        f"fit {task} model: objective={model.report.objective:.6f} "
        f"iters={model.report.iterations}",
        err=True,
    )
    if predictions:
        ids = manifest.get("ids") or [g.graph_id or str(i) for i, g in enumerate(graphs)]
        _write_predictions(predictions, ids, model.decision(X))


@cli.command("eval")
@click.option("--graphs", "graphs_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--schema", "schema_key", default="full", show_default=True)
@click.option("--features", "features_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--embedding", "embedding_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", default="random-gaussian", show_default=True,
              type=click.Choice(["random-gaussian", "random-rademacher", "trained"]))
@click.option("--r", default=100, show_default=True)
@click.option("--t", "--T", "t_steps", default=6, show_default=True)
@click.option("--variant", default="walk", show_default=True,
              type=click.Choice(["walk", "path", "vertex_path"]))
@click.option("--folds", default=5, show_default=True)
@click.option("--task", default="logistic", show_default=True,
              type=click.Choice(["logistic", "least-squares"]))
@click.option("--metric", default="roc-auc", show_default=True,
              type=click.Choice(["rmse", "mae", "roc-auc", "pr-auc"]))
@click.option("--lam", default=None, type=float)
@click.option("--stratified/--no-stratified", default=False, show_default=True)
@click.option("--predictions", default=None, type=click.Path(dir_okay=False))
@click.option("--seed", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def eval_cmd(ctx, graphs_path, schema_key, features_path, model_path, embedding_path,
             mode, r, t_steps, variant, folds, task, metric, lam, stratified,
             predictions, seed, config_path):
    """Score a saved model, or run k-fold cross-validation."""
    _merge_config(ctx, config_path)
    p = ctx.params
    schema_key, mode, r, t_steps, variant = (
        p["schema_key"], p["mode"], p["r"], p["t_steps"], p["variant"]
    )
    folds, task, metric, lam, stratified, seed = (
        p["folds"], p["task"], p["metric"], p["lam"], p["stratified"], p["seed"]
    )
    seed = seed if seed is not None else _seed_default()
    emb = load_embedding(embedding_path) if embedding_path else None
    manifest = None
    if features_path:
        X, manifest = load_features(features_path)
    schema = _resolve_schema(schema_key, manifest=manifest, embedding=emb)
    graphs = _load_graphs(graphs_path, schema)
    y = _labels_for(graphs)
    if features_path and X.shape[0] != len(graphs):
        raise ValueError(
            f"feature rows ({X.shape[0]}) do not match graphs ({len(graphs)})"
        )

    if model_path:
        if not features_path:
            raise click.UsageError("--model needs --features")
        model = LinearModel.from_json(Path(model_path).read_text(encoding="utf-8"))
        scores = model.decision(X)
        value = compute_metric(metric, y, scores)
        click.echo(json.dumps({"metric": metric,
                               "value": None if value is None else float(value)}))
        if predictions:
            ids = manifest.get("ids") or [g.graph_id or str(i)
                                          for i, g in enumerate(graphs)]
            _write_predictions(predictions, ids, scores)
        return

    if features_path:
        report = kfold_features(X, y, task=task, metric=metric, folds=folds,
                                seed=seed, lam=lam, stratified=stratified)
    elif emb is not None:
        X, _ = embed_corpus(graphs, emb, t_steps, variant=variant,
                            normalization="unit-l2")
        report = kfold_features(X, y, task=task, metric=metric, folds=folds,
                                seed=seed, lam=lam, stratified=stratified)
    else:
        cfg = PipelineConfig(embedding=mode, r=r, T=t_steps, variant=variant,
                             task=task, metric=metric, lam=lam, seed=seed)
        report = kfold_cv(graphs, y, schema, cfg, folds=folds, seed=seed,
                          stratified=stratified)
    click.echo(json.dumps(report.to_dict()))


# -- sweep ----------------------------------------------------------------------------


@cli.command()
@click.option("--graphs", "graphs_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--schema", "schema_key", default="full", show_default=True)
@click.option("--r-grid", default="50,100", show_default=True)
@click.option("--t-grid", default="2,4,6", show_default=True)
@click.option("--mode", default="random-gaussian", show_default=True,
              type=click.Choice(["random-gaussian", "random-rademacher", "trained"]))
@click.option("--variant", default="walk", show_default=True,
              type=click.Choice(["walk", "path", "vertex_path"]))
@click.option("--folds", default=5, show_default=True)
@click.option("--task", default="logistic", show_default=True,
              type=click.Choice(["logistic", "least-squares"]))
@click.option("--metric", default="roc-auc", show_default=True,
              type=click.Choice(["rmse", "mae", "roc-auc", "pr-auc"]))
@click.option("--lam", default=None, type=float)
@click.option("-o", "--out", default=None, type=click.Path(dir_okay=False))
@click.option("--seed", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def sweep(ctx, graphs_path, schema_key, r_grid, t_grid, mode, variant, folds, task,
          metric, lam, out, seed, config_path):
    """Cross-validated metric over an (r, T) grid, one row per combination."""
    _merge_config(ctx, config_path)
    p = ctx.params
    schema_key, r_grid, t_grid, mode, variant = (
        p["schema_key"], p["r_grid"], p["t_grid"], p["mode"], p["variant"]
    )
    folds, task, metric, lam, seed = (
        p["folds"], p["task"], p["metric"], p["lam"], p["seed"]
    )
    seed = seed if seed is not None else _seed_default()
    schema = _schema_by_key(schema_key)
    graphs = _load_graphs(graphs_path, schema)
    y = _labels_for(graphs)
    rs = [int(x) for x in str(r_grid).split(",") if x]
    ts = [int(x) for x in str(t_grid).split(",") if x]
    rows = []
    for r in rs:
        for T in ts:
            cfg = PipelineConfig(embedding=mode, r=r, T=T, variant=variant,
                                 task=task, metric=metric, lam=lam, seed=seed)
            report = kfold_cv(graphs, y, schema, cfg, folds=folds, seed=seed)
            rows.append((r, T, report))
            click.echo(f"r={r} T={T} {report}", err=True)
    header = ["r", "T"] + [f"fold_{i}" for i in range(folds)] + ["mean", "std"]
    lines = [",".join(header)]
    for r, T, report in rows:
        cells = [str(r), str(T)]
        cells += ["" if v is None else repr(float(v)) for v in report.fold_values]
        cells += ["" if report.mean is None else repr(report.mean),
                  "" if report.std is None else repr(report.std)]
        lines.append(",".join(cells))
    table = "\n".join(lines) + "\n"
    click.echo(table, nl=False)
    if out:
        Path(out).write_text(table, encoding="utf-8")
        _write_sidecar(out, _manifest(
            "sweep",
            {"r_grid": rs, "t_grid": ts, "mode": mode, "variant": variant,
             "folds": folds, "task": task, "metric": metric, "lam": lam,
             "seed": seed},
            {"graphs": graphs_path},
        ))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:  # --help and friends
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except _PARSE_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except _NUMERIC_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
