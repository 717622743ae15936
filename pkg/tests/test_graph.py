import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ngram_graph as ng
from ngram_graph import MolecularGraph, one_hot, permute, validate_graph
from ngram_graph.graph import dumps_graph, inverse_permutation, read_json_graphs

from . import synth


class TestValidation:
    def test_smallest_legal_graph(self, schema):
        g = MolecularGraph(num_vertices=1, attr=[[0, 0]], edges=[])
        assert validate_graph(g, schema).ok

    def test_self_loop_reported(self, schema):
        g = MolecularGraph(num_vertices=2, attr=[[0, 0], [0, 0]], edges=[[0, 0]])
        report = validate_graph(g, schema)
        assert not report.ok
        assert any("self-loop@0" in v for v in report.violations)

    def test_attr_index_out_of_range(self, schema):
        attr = [[0, 0], [0, 0], [0, schema.cardinalities[1]]]
        g = MolecularGraph(num_vertices=3, attr=attr, edges=[])
        report = validate_graph(g, schema)
        assert any("out of range" in v for v in report.violations)

    def test_asymmetric_dense_adjacency(self, schema):
        a = np.zeros((3, 3), dtype=np.int64)
        a[0, 1] = 1  # missing the mirror entry
        g = MolecularGraph.from_adjacency(np.zeros((3, 2), dtype=np.int64), a)
        report = validate_graph(g, schema)
        assert any("not symmetric" in v for v in report.violations)

    def test_duplicate_edge_reported(self, schema):
        g = MolecularGraph(
            num_vertices=2, attr=[[0, 0], [0, 0]], edges=[[0, 1], [1, 0]]
        )
        report = validate_graph(g, schema)
        assert any("duplicate edge" in v for v in report.violations)

    def test_edge_endpoint_out_of_range(self, schema):
        g = MolecularGraph(num_vertices=2, attr=[[0, 0], [0, 0]], edges=[[0, 5]])
        assert not validate_graph(g, schema).ok

    def test_degrees_match_adjacency_rows(self, rng, schema):
        g = synth.random_graph(rng, schema, m=7, density=0.5)
        assert np.array_equal(g.degrees(), g.adjacency_matrix().sum(axis=0))

    def test_bitset_membership_matches_edge_list(self, rng, schema):
        g = synth.random_graph(rng, schema, m=8, density=0.4)
        a = g.adjacency_matrix()
        for u in range(8):
            for v in range(8):
                assert g.has_edge(u, v) == bool(a[u, v])


class TestOneHot:
    def test_two_attribute_rows(self):
        sch = synth.small_schema(ks=(2, 3))
        g = MolecularGraph(num_vertices=1, attr=[[1, 2]], edges=[])
        h = one_hot(g, sch, 0)
        assert h.shape == (5,)
        assert sorted(np.nonzero(h)[0].tolist()) == [1, 4]

    def test_single_attribute(self):
        sch = synth.small_schema(ks=(2,))
        g = MolecularGraph(num_vertices=1, attr=[[0]], edges=[])
        assert one_hot(g, sch, 0).tolist() == [1, 0]

    def test_full_schema_carbon_degree_four(self, full_schema):
        # symbol C is slot 0; the degree block starts at slot 10, so degree 4
        # lights slot 14
        row = [0, 4, 0, 0, 2, 0, 0, 0]
        g = MolecularGraph(num_vertices=1, attr=[row], edges=[])
        hot = set(np.nonzero(one_hot(g, full_schema, 0))[0].tolist())
        assert 0 in hot and 14 in hot

    def test_exactly_one_per_block(self, rng, schema):
        g = synth.random_graph(rng, schema, m=6)
        h = one_hot(g, schema, 3)
        for j, off in enumerate(schema.offsets):
            block = h[off : off + schema.cardinalities[j]]
            assert block.sum() == 1

    def test_index_out_of_range_faults(self, schema):
        g = MolecularGraph(num_vertices=1, attr=[[0, 0]], edges=[])
        with pytest.raises(ng.GraphError):
            one_hot(g, schema, 1)


class TestPermute:
    def test_identity(self, rng, schema):
        g = synth.random_graph(rng, schema, m=5)
        assert permute(g, np.arange(5)).structurally_equal(g)

    def test_swap_on_single_edge(self, schema):
        g = MolecularGraph(num_vertices=2, attr=[[0, 0], [1, 1]], edges=[[0, 1]])
        swapped = permute(g, [1, 0])
        assert np.array_equal(swapped.canonical_edges(), g.canonical_edges())
        assert swapped.attr[1].tolist() == [0, 0]

    def test_degree_multiset_preserved(self, rng, schema):
        g = synth.random_graph(rng, schema, m=6, density=0.5)
        pi = rng.permutation(6)
        assert sorted(permute(g, pi).degrees().tolist()) == sorted(g.degrees().tolist())

    def test_inverse_round_trip(self, rng, schema):
        g = synth.random_graph(rng, schema, m=6)
        pi = rng.permutation(6)
        assert permute(permute(g, pi), inverse_permutation(pi)).structurally_equal(g)

    def test_non_bijection_faults(self, schema):
        g = MolecularGraph(num_vertices=3, attr=np.zeros((3, 2)), edges=[])
        with pytest.raises(ng.GraphError):
            permute(g, [0, 0, 1])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_group_action(self, seed):
        r = np.random.default_rng(seed)
        sch = synth.small_schema()
        g = synth.random_graph(r, sch, m=6, density=0.4)
        pi, rho = r.permutation(6), r.permutation(6)
        left = permute(g, pi[rho])  # composition: apply rho, then pi
        right = permute(permute(g, rho), pi)
        assert left.structurally_equal(right)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_validation_invariant_under_permutation(self, seed):
        r = np.random.default_rng(seed)
        sch = synth.small_schema()
        g = synth.random_graph(r, sch, m=5, density=0.4)
        pi = r.permutation(5)
        assert validate_graph(permute(g, pi), sch).ok == validate_graph(g, sch).ok


class TestJsonDocuments:
    def test_round_trip(self, rng, schema):
        g = synth.random_graph(rng, schema, m=5, label=1.5, graph_id="abc")
        text = dumps_graph(g, schema)
        back = read_json_graphs(text, schema)[0]
        assert back.structurally_equal(g)

    def test_self_loop_document_rejected(self, schema):
        doc = {
            "schema_id": schema.schema_id,
            "id": "bad",
            "num_vertices": 4,
            "attributes": [[0, 0]] * 4,
            "edges": [[3, 3]],
        }
        graphs, errors = read_json_graphs(json.dumps(doc), schema, strict=False)
        assert not graphs
        assert "self-loop" in errors[0][1]

    def test_schema_id_mismatch_faults(self, schema):
        other = synth.small_schema(ks=(3, 3), name="other")
        doc = {
            "schema_id": other.schema_id,
            "id": None,
            "num_vertices": 1,
            "attributes": [[0, 0]],
            "edges": [],
        }
        with pytest.raises(ng.GraphError):
            read_json_graphs(json.dumps(doc), schema)

    def test_thousand_random_graphs_canonical_reserialization(self, rng, schema):
        graphs = synth.random_corpus(rng, schema, 1000, density=0.4)
        lines = [dumps_graph(g, schema) for g in graphs]
        parsed = read_json_graphs("\n".join(lines), schema)
        again = [dumps_graph(g, schema) for g in parsed]
        assert again == lines  # byte-identical canonical re-serialization

    def test_empty_stream(self, schema):
        assert read_json_graphs("", schema) == []
