"""Vertex embedding matrices: random generation, lookup, and file format.

The matrix W has one column per one-hot slot (r x K); a vertex embeds as
the sum of the columns selected by its attribute values. Matrices carry the
schema they were built against so they can never be applied to graphs
encoded under a different vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrixio
from .graph import MolecularGraph, validate_graph
from .schema import AttributeSchema


class EmbeddingError(ValueError):
    """Raised on schema mismatches or corrupt embedding files."""


@dataclass(frozen=True)
class VertexEmbeddingMatrix:
    matrix: np.ndarray  # r x K
    schema: AttributeSchema
    provenance: dict

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2:
            raise EmbeddingError("embedding matrix must be 2-d")
        if m.shape[1] != self.schema.total_width:
            raise EmbeddingError(
                f"matrix has {m.shape[1]} columns, schema K={self.schema.total_width}"
            )
        if np.issubdtype(m.dtype, np.floating) and not np.isfinite(m).all():
            raise EmbeddingError("embedding matrix contains non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def schema_fingerprint(self) -> str:
        return self.schema.fingerprint

    def block(self, j: int) -> np.ndarray:
        """Columns of W belonging to attribute j."""
        off = self.schema.offsets[j]
        return self.matrix[:, off : off + self.schema.cardinalities[j]]


def random_embedding(
    schema: AttributeSchema,
    r: int,
    dist: str = "rademacher",
    seed: int | None = 0,
    scale: float | None = None,
) -> VertexEmbeddingMatrix:
    """I.i.d. random W: rademacher = uniform {-c, +c}, gaussian = N(0, c^2).

    The default scale is c = r^(-1/2), which keeps column norms near one.
    """
    if r < 1:
        raise EmbeddingError(f"embedding dimension must be >= 1, got {r}")
    c = r ** -0.5 if scale is None else float(scale)
    rng = np.random.default_rng(seed)
    K = schema.total_width
    if dist == "rademacher":
        w = c * rng.choice((-1.0, 1.0), size=(r, K))
    elif dist == "gaussian":
        w = c * rng.standard_normal((r, K))
    else:
        raise EmbeddingError(f"unknown distribution {dist!r}")
    prov = {"kind": f"random-{dist}", "seed": seed, "scale": c, "r": r}
    return VertexEmbeddingMatrix(matrix=w, schema=schema, provenance=prov)


def _check_schema(g: MolecularGraph, emb: VertexEmbeddingMatrix) -> None:
    if g.schema_fingerprint is not None:
        if g.schema_fingerprint != emb.schema.fingerprint:
            raise EmbeddingError(
                "schema fingerprint mismatch: graph "
                f"{g.schema_fingerprint} vs embedding {emb.schema.fingerprint}"
            )
    else:
        report = validate_graph(g, emb.schema)
        if not report.ok:
            raise EmbeddingError(f"graph invalid under embedding schema: {report}")


def embed_vertices(g: MolecularGraph, emb: VertexEmbeddingMatrix) -> np.ndarray:
    """Per-vertex embeddings as an r x m matrix (column i = W h_i)."""
    _check_schema(g, emb)
    W = emb.matrix
    offs = emb.schema.offsets
    r = W.shape[0]
    F = np.zeros((r, g.num_vertices), dtype=W.dtype)
    for j in range(emb.schema.num_attributes):
        F += W[:, offs[j] + g.attr[:, j]]
    return F


def save_embedding(path, emb: VertexEmbeddingMatrix) -> None:
    meta = {
        "kind": "vertex-embedding",
        "r": emb.dim,
        "K": emb.schema.total_width,
        "schema_fingerprint": emb.schema.fingerprint,
        "schema": emb.schema.to_dict(),
        "provenance": emb.provenance,
    }
    matrixio.write_matrix(path, emb.matrix, meta)


def load_embedding(path) -> VertexEmbeddingMatrix:
    matrix, meta = matrixio.read_matrix(path)
    if meta.get("kind") != "vertex-embedding":
        raise EmbeddingError(f"{path}: not a vertex embedding file")
    if "schema" not in meta or "schema_fingerprint" not in meta:
        raise EmbeddingError(f"{path}: schema fingerprint missing from header")
    schema = AttributeSchema.from_dict(meta["schema"])
    if schema.fingerprint != meta["schema_fingerprint"]:
        raise EmbeddingError(f"{path}: schema fingerprint does not match stored schema")
    return VertexEmbeddingMatrix(
        matrix=matrix, schema=schema, provenance=meta.get("provenance", {})
    )


def export_embedding_csv(path, emb: VertexEmbeddingMatrix) -> None:
    """Human-readable dump: one row per embedding dimension, one column per slot."""
    tokens = [
        f"{name}={value}"
        for name, values in emb.schema.attributes
        for value in values
    ]
    matrixio.write_csv(path, emb.matrix, header=tokens)
