import numpy as np
import pytest

from ngram_graph import FULL_SCHEMA

from . import synth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def schema():
    return synth.small_schema()


@pytest.fixture
def full_schema():
    return FULL_SCHEMA


@pytest.fixture
def path_xyz():
    """3-vertex path with one single-valued attribute x-y-z."""
    import ngram_graph as ng

    sch = synth.single_attribute_schema(3, name="xyz")
    g = ng.MolecularGraph(
        num_vertices=3, attr=[[0], [1], [2]], edges=[[0, 1], [1, 2]],
        schema_fingerprint=sch.fingerprint,
    )
    return sch, g
