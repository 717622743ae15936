import numpy as np
import pytest

import ngram_graph as ng
from ngram_graph import CbowConfig, extract_contexts, train_cbow
from ngram_graph.cbow import CbowNetwork, TrainingDiverged

from . import synth


def _line_graph(schema, attrs, edges):
    return ng.MolecularGraph(
        num_vertices=len(attrs), attr=attrs, edges=edges,
        schema_fingerprint=schema.fingerprint,
    )


class TestExtractContexts:
    def test_single_edge_two_samples(self, schema):
        g = _line_graph(schema, [[0, 0], [1, 1]], [[0, 1]])
        samples = extract_contexts([g], schema)
        assert len(samples) == 2
        assert all(s.context_size == 1 for s in samples)

    def test_path_middle_vertex_context(self, schema):
        g = _line_graph(schema, [[0, 0], [1, 1], [2, 2]], [[0, 1], [1, 2]])
        samples = extract_contexts([g], schema)
        middle = samples[1]
        assert middle.context_size == 2
        # context counts = h_0 + h_2
        offs = schema.offsets
        assert middle.context[offs[0] + 0] == 1
        assert middle.context[offs[0] + 2] == 1
        assert middle.context.sum() == 2 * schema.num_attributes

    def test_star_center_has_four_neighbors(self, schema):
        g = _line_graph(
            schema,
            [[0, 0], [1, 1], [2, 2], [3, 3], [4, 0]],
            [[0, 1], [0, 2], [0, 3], [0, 4]],
        )
        samples = extract_contexts([g], schema)
        assert samples[0].context_size == 4

    def test_isolated_vertices_skipped(self, schema):
        g = _line_graph(schema, [[0, 0], [1, 1], [2, 2]], [[0, 1]])
        samples = extract_contexts([g], schema)
        assert len(samples) == 2


class TestTraining:
    def test_predictable_attribute_reaches_high_accuracy(self, rng):
        sch = synth.small_schema(ks=(6, 5))
        graphs = synth.neighbor_predictable_corpus(rng, sch, n_graphs=120)
        samples = extract_contexts(graphs, sch)
        cfg = CbowConfig(r=16, aggregator="mean", hidden=(32,), epochs=30,
                         batch_size=128, learning_rate=3e-3, seed=0)
        _, report = train_cbow(samples, sch, cfg)
        assert report.holdout_accuracy["attr0"] >= 0.99

    def test_zero_epochs_equals_random_init(self, rng):
        sch = synth.small_schema()
        graphs = synth.random_corpus(rng, sch, 10, density=0.5, connected=True)
        samples = extract_contexts(graphs, sch)
        cfg = CbowConfig(r=8, epochs=0, seed=4)
        emb, report = train_cbow(samples, sch, cfg)
        assert report.epoch_losses == []
        net = CbowNetwork(sch, cfg, np.random.default_rng(4))
        assert np.array_equal(emb.matrix, net.W)

    def test_deterministic_given_seed(self, rng):
        sch = synth.small_schema()
        graphs = synth.random_corpus(rng, sch, 15, density=0.5, connected=True)
        samples = extract_contexts(graphs, sch)
        cfg = CbowConfig(r=6, epochs=3, hidden=(8,), seed=11)
        a, _ = train_cbow(samples, sch, cfg)
        b, _ = train_cbow(samples, sch, cfg)
        assert np.array_equal(a.matrix, b.matrix)

    def test_empty_samples_rejected(self, schema):
        with pytest.raises(ValueError):
            train_cbow([], schema, CbowConfig(r=4, epochs=1))

    def test_divergence_names_epoch(self, rng):
        sch = synth.small_schema()
        graphs = synth.random_corpus(rng, sch, 10, density=0.6, connected=True)
        samples = extract_contexts(graphs, sch)
        # a step size at overflow scale drives the forward pass to inf - inf
        cfg = CbowConfig(r=4, epochs=5, hidden=(8, 8), learning_rate=1e200, seed=0)
        with np.errstate(all="ignore"), pytest.raises(TrainingDiverged) as err:
            train_cbow(samples, sch, cfg)
        assert err.value.epoch >= 0

    def test_unsupervised_no_labels_read(self, rng):
        # identical training output with and without labels on the graphs
        sch = synth.small_schema()
        graphs = synth.random_corpus(rng, sch, 10, density=0.5, connected=True)
        labeled = [g.replace(label=float(i)) for i, g in enumerate(graphs)]
        cfg = CbowConfig(r=5, epochs=2, seed=3)
        a, _ = train_cbow(extract_contexts(graphs, sch), sch, cfg)
        b, _ = train_cbow(extract_contexts(labeled, sch), sch, cfg)
        assert np.array_equal(a.matrix, b.matrix)

    def test_provenance_records_config(self, rng):
        sch = synth.small_schema()
        graphs = synth.random_corpus(rng, sch, 8, density=0.6, connected=True)
        cfg = CbowConfig(r=5, epochs=1, seed=3)
        emb, _ = ng.train_on_graphs(graphs, sch, cfg, dataset_id="unit")
        assert emb.provenance["kind"] == "trained"
        assert emb.provenance["dataset_id"] == "unit"
        assert emb.provenance["config_hash"] == cfg.config_hash()


class TestNetworkMath:
    def test_gradients_match_finite_differences(self, rng):
        sch = synth.small_schema(ks=(3, 2))
        graphs = synth.random_corpus(rng, sch, 5, density=0.6, connected=True)
        samples = extract_contexts(graphs, sch)[:10]
        assert len(samples) == 10
        cfg = CbowConfig(r=7, aggregator="sum", hidden=(9, 5), epochs=1, seed=0)
        net = CbowNetwork(sch, cfg, np.random.default_rng(0))
        ctx = np.stack([s.context for s in samples])
        sz = np.asarray([s.context_size for s in samples], dtype=np.float64)
        tg = np.stack([s.target for s in samples])
        _, grads = net.loss_and_grads(ctx, sz, tg)
        analytic = np.concatenate([g.ravel() for g in grads])

        x0 = net.get_flat()
        numeric = np.empty_like(x0)
        eps = 1e-6
        for i in range(x0.size):
            for sgn, slot in ((+1, 0), (-1, 1)):
                x = x0.copy()
                x[i] += sgn * eps
                net.set_flat(x)
                val, _ = net.loss_and_grads(ctx, sz, tg)
                if slot == 0:
                    up = val
                else:
                    down = val
            numeric[i] = (up - down) / (2 * eps)
        net.set_flat(x0)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
        assert np.linalg.norm(analytic - numeric) / denom <= 1e-4

    def test_mean_aggregator_single_context_is_exact_lookup(self):
        sch = synth.single_attribute_schema(4)
        cfg = CbowConfig(r=3, aggregator="mean", hidden=(4,), epochs=1, seed=0)
        net = CbowNetwork(sch, cfg, np.random.default_rng(1))
        ctx = np.zeros((1, 4))
        ctx[0, 2] = 1.0  # single neighbor with value index 2
        acts, _ = net.forward(ctx, np.array([1.0]))
        assert np.allclose(acts[0][0], net.W[:, 2])

    def test_sum_aggregator_scales_with_context(self):
        sch = synth.single_attribute_schema(4)
        cfg = CbowConfig(r=3, aggregator="sum", hidden=(4,), epochs=1, seed=0)
        net = CbowNetwork(sch, cfg, np.random.default_rng(1))
        ctx = np.zeros((1, 4))
        ctx[0, 2] = 3.0
        acts, _ = net.forward(ctx, np.array([3.0]))
        assert np.allclose(acts[0][0], 3.0 * net.W[:, 2])
