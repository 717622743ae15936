import numpy as np
import pytest

import ngram_graph as ng
from ngram_graph import PipelineConfig, export_features, kfold_cv, load_features
from ngram_graph.crossval import (
    LeakageError,
    _check_no_leakage,
    fold_indices,
    kfold_features,
    manifest_hash,
)
from ngram_graph.vertex import VertexEmbeddingMatrix

from . import synth


class TestFolds:
    def test_partition_covers_everything(self):
        splits = fold_indices(23, 5, seed=0)
        all_test = np.concatenate([te for _, te in splits])
        assert sorted(all_test.tolist()) == list(range(23))
        for tr, te in splits:
            assert not set(tr) & set(te)

    def test_deterministic_by_seed(self):
        a = fold_indices(40, 5, seed=3)
        b = fold_indices(40, 5, seed=3)
        for (tra, tea), (trb, teb) in zip(a, b):
            assert np.array_equal(tea, teb) and np.array_equal(tra, trb)

    def test_stratified_balances_classes(self):
        y = np.array([1.0] * 10 + [0.0] * 40)
        splits = fold_indices(50, 5, seed=1, labels=y, stratified=True)
        for _, te in splits:
            assert y[te].sum() == 2  # 10 positives dealt evenly over 5 folds

    def test_five_on_five_is_leave_one_out(self):
        splits = fold_indices(5, 5, seed=0)
        for tr, te in splits:
            assert te.size == 1 and tr.size == 4

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            fold_indices(3, 5, seed=0)


class TestKfoldFeatures:
    def test_constant_labels_regression_zero_rmse(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((25, 3))
        y = np.full(25, 2.5)
        report = kfold_features(X, y, task="least-squares", metric="rmse",
                                folds=5, seed=0, lam=1e-6)
        assert report.mean <= 1e-6

    def test_single_class_fold_reports_absent(self):
        X = np.random.default_rng(1).standard_normal((10, 2))
        y = np.zeros(10)
        y[0] = 1.0
        report = kfold_features(X, y, task="logistic", metric="roc-auc",
                                folds=5, seed=0, lam=1e-3)
        assert None in report.fold_values or report.mean is not None

    def test_lambda_grid_selection_runs(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((60, 4))
        y = (X[:, 0] > 0).astype(float)
        report = kfold_features(X, y, folds=5, seed=0, lam=None)
        assert report.mean >= 0.9


class TestKfoldPipeline:
    def test_random_embedding_pipeline(self, rng):
        sch = synth.single_attribute_schema(10)
        graphs, labels, _ = synth.count_label_corpus(rng, sch, n_graphs=80,
                                                     m_range=(4, 8))
        cfg = PipelineConfig(embedding="random-gaussian", r=24, T=2,
                             lam=1e-4, metric="roc-auc", seed=1)
        report = kfold_cv(graphs, labels, sch, cfg, folds=5, seed=0)
        assert len(report.fold_values) == 5
        assert report.mean is not None and report.mean > 0.5

    def test_trained_embedding_isolated_per_fold(self, rng):
        sch = synth.small_schema(ks=(5, 4))
        graphs = synth.random_corpus(rng, sch, 25, density=0.5, connected=True)
        labels = (rng.random(25) > 0.5).astype(float)
        cbow = ng.CbowConfig(r=6, epochs=1, hidden=(8,), seed=0)
        cfg = PipelineConfig(embedding="trained", r=6, T=2, cbow=cbow,
                             lam=1e-3, seed=2)
        report = kfold_cv(graphs, labels, sch, cfg, folds=5, seed=0)
        assert len(report.fold_values) == 5

    def test_leakage_guard_raises(self, rng, schema):
        emb = ng.random_embedding(schema, 4, seed=0)
        tainted = VertexEmbeddingMatrix(
            matrix=emb.matrix, schema=schema,
            provenance={"kind": "trained", "train_rows": [1, 2, 3]},
        )
        with pytest.raises(LeakageError):
            _check_no_leakage(tainted, [3, 9])

    def test_mismatched_label_count_rejected(self, rng, schema):
        graphs = synth.random_corpus(rng, schema, 6)
        with pytest.raises(ValueError):
            kfold_cv(graphs, [0.0, 1.0], schema, PipelineConfig(), folds=2)


class TestExport:
    def test_round_trip_bit_identical(self, rng, schema, tmp_path):
        graphs = synth.random_corpus(rng, schema, 12, density=0.4)
        emb = ng.random_embedding(schema, 5, seed=0)
        X, manifest = ng.embed_corpus(graphs, emb, 3)
        paths = export_features(X, manifest, tmp_path / "feats")
        back, manifest_back = load_features(paths["bin"])
        assert np.array_equal(back, X)
        assert manifest_back == manifest

    def test_manifest_survives_round_trip(self, rng, schema, tmp_path):
        graphs = synth.random_corpus(rng, schema, 5)
        emb = ng.random_embedding(schema, 4, seed=3)
        X, manifest = ng.embed_corpus(graphs, emb, 2, seed=77)
        paths = export_features(X, manifest, tmp_path / "f")
        _, m2 = load_features(paths["bin"])
        assert m2["seed"] == 77
        assert m2["w_provenance"] == emb.provenance
        assert manifest_hash(m2) == manifest_hash(manifest)

    def test_exported_width_matches_manifest(self, rng, schema, tmp_path):
        graphs = synth.random_corpus(rng, schema, 6)
        emb = ng.random_embedding(schema, 7, seed=0)
        X, manifest = ng.embed_corpus(graphs, emb, 4)
        paths = export_features(X, manifest, tmp_path / "f")
        back, m2 = load_features(paths["bin"])
        assert back.shape[1] == m2["T"] * m2["r"] == 28

    def test_csv_header_layout(self, rng, schema, tmp_path):
        graphs = synth.random_corpus(rng, schema, 3)
        emb = ng.random_embedding(schema, 2, seed=0)
        X, manifest = ng.embed_corpus(graphs, emb, 2)
        paths = export_features(X, manifest, tmp_path / "f")
        header = paths["csv"].read_text().splitlines()[0].split(",")
        assert header[:3] == ["g_id", "f_1_0", "f_1_1"]
        assert header[-1] == "f_2_1"
