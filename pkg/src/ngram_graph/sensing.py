"""Block-diagonal sensing construction and the walk-count identity.

With one Rademacher block U^j per attribute, arranged block-diagonally into
W, the level-n embedding of the distinct-value walk set equals a linear
image of the co-occurrence counts: each count coordinate's sensing column
is the element-wise product of the n base columns named by its subset. The
level operators assemble those n-way column products block by block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .counts import (
    count_statistics,
    iter_subsets_colex,
    subset_unrank,
    walk_products_distinct,
)
from .graph import MolecularGraph
from .schema import AttributeSchema
from .vertex import VertexEmbeddingMatrix, embed_vertices

MATERIALIZE_CAP = 10_000_000  # max r * columns entries for a dense level operator


class SensingError(ValueError):
    pass


def allocate_rows(schema: AttributeSchema, r: int, allocation: str = "proportional"):
    """Split r rows across attribute blocks; every block gets at least one."""
    S = schema.num_attributes
    if r < S:
        raise SensingError(f"need r >= S, got r={r} < S={S}")
    ks = schema.cardinalities
    if allocation == "proportional":
        base = [max(1, (r * k) // sum(ks)) for k in ks]
    elif allocation == "equal":
        base = [r // S] * S
    else:
        raise SensingError(f"unknown allocation {allocation!r}")
    # trim if the max(1, .) bumps overshot, then hand leftovers to largest blocks
    order = sorted(range(S), key=lambda j: (-ks[j], j))
    i = 0
    while sum(base) > r:
        j = order[i % S]
        if base[j] > 1:
            base[j] -= 1
        i += 1
    i = 0
    while sum(base) < r:
        base[order[i % S]] += 1
        i += 1
    return tuple(base)


@dataclass(frozen=True)
class LevelOperator:
    """Block-diagonal n-way column product operator for one level.

    Blocks are materialized densely while ``r * columns`` stays under
    ``cap``; beyond that, applications fall back to chunked or per-column
    generation.
    """

    blocks: tuple            # base blocks U^j, each (r_j, k_j)
    n: int
    row_offsets: tuple
    total_rows: int
    cap: int = MATERIALIZE_CAP
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def col_dims(self) -> tuple:
        return tuple(comb(U.shape[1], self.n) for U in self.blocks)

    @property
    def col_offsets(self) -> tuple:
        offs, acc = [], 0
        for d in self.col_dims:
            offs.append(acc)
            acc += d
        return tuple(offs)

    @property
    def shape(self) -> tuple:
        return (self.total_rows, sum(self.col_dims))

    @property
    def entries(self) -> int:
        return self.shape[0] * self.shape[1]

    def block_matrix(self, j: int) -> np.ndarray:
        """Dense (r_j x C(k_j, n)) product block, cached."""
        got = self._cache.get(j)
        if got is None:
            U = self.blocks[j]
            d = comb(U.shape[1], self.n)
            idx = np.fromiter(
                (i for s in iter_subsets_colex(U.shape[1], self.n) for i in s),
                dtype=np.int64,
                count=d * self.n,
            ).reshape(d, self.n)
            got = U[:, idx].prod(axis=2) if d else np.zeros((U.shape[0], 0), U.dtype)
            self._cache[j] = got
        return got

    def iter_column_chunks(self, j: int, chunk: int = 4096):
        """Yield (col_start_in_block, dense r_j x width) pieces of block j."""
        U = self.blocks[j]
        k = U.shape[1]
        buf = []
        start = 0
        for s in iter_subsets_colex(k, self.n):
            buf.append(s)
            if len(buf) == chunk:
                idx = np.asarray(buf, dtype=np.int64)
                yield start, U[:, idx].prod(axis=2)
                start += len(buf)
                buf = []
        if buf:
            idx = np.asarray(buf, dtype=np.int64)
            yield start, U[:, idx].prod(axis=2)

    def materialize(self, cap: int | None = None) -> np.ndarray:
        """Full dense operator; refuses beyond the entry cap."""
        cap = self.cap if cap is None else cap
        if self.entries > cap:
            raise SensingError(
                f"level operator has {self.entries} entries, over cap {cap}; "
                "use the matrix-free interface"
            )
        dtype = np.result_type(*(U.dtype for U in self.blocks))
        out = np.zeros(self.shape, dtype=dtype)
        coffs = self.col_offsets
        for j, U in enumerate(self.blocks):
            b = self.block_matrix(j)
            r0 = self.row_offsets[j]
            out[r0 : r0 + U.shape[0], coffs[j] : coffs[j] + b.shape[1]] = b
        return out

    def matvec(self, c: np.ndarray) -> np.ndarray:
        dtype = np.result_type(c.dtype, *(U.dtype for U in self.blocks))
        out = np.zeros(self.total_rows, dtype=dtype)
        coffs = self.col_offsets
        for j, U in enumerate(self.blocks):
            r0 = self.row_offsets[j]
            seg = c[coffs[j] : coffs[j] + self.col_dims[j]]
            if self.entries <= self.cap:
                out[r0 : r0 + U.shape[0]] += self.block_matrix(j) @ seg
            else:
                nz = np.nonzero(seg)[0]
                for col in nz:
                    s = subset_unrank(int(col), self.n)
                    out[r0 : r0 + U.shape[0]] += seg[col] * U[:, s].prod(axis=1)
        return out

    def correlations(self, res: np.ndarray) -> np.ndarray:
        """Transpose-apply: one correlation per column, without full storage."""
        out = np.empty(self.shape[1], dtype=np.float64)
        coffs = self.col_offsets
        for j, U in enumerate(self.blocks):
            r0 = self.row_offsets[j]
            seg = res[r0 : r0 + U.shape[0]]
            if self.entries <= self.cap:
                out[coffs[j] : coffs[j] + self.col_dims[j]] = self.block_matrix(j).T @ seg
            else:
                for start, piece in self.iter_column_chunks(j):
                    out[coffs[j] + start : coffs[j] + start + piece.shape[1]] = piece.T @ seg
        return out

    def column(self, idx: int) -> np.ndarray:
        coffs = self.col_offsets
        for j, U in enumerate(self.blocks):
            if coffs[j] <= idx < coffs[j] + self.col_dims[j]:
                s = subset_unrank(idx - coffs[j], self.n)
                col = np.zeros(self.total_rows, dtype=np.float64)
                r0 = self.row_offsets[j]
                col[r0 : r0 + U.shape[0]] = U[:, s].prod(axis=1)
                return col
        raise IndexError(idx)

    def column_norms(self) -> np.ndarray:
        """Exact per-column norms (constant within a block for +-c entries)."""
        out = np.empty(self.shape[1], dtype=np.float64)
        coffs = self.col_offsets
        for j, U in enumerate(self.blocks):
            c = float(np.abs(U[0, 0])) if U.size else 1.0
            norm = (c ** self.n) * np.sqrt(U.shape[0])
            out[coffs[j] : coffs[j] + self.col_dims[j]] = norm
        return out


@dataclass(frozen=True)
class BlockSensingMatrix:
    schema: AttributeSchema
    blocks: tuple          # U^j, each (r_j, k_j)
    scale: float
    seed: int | None
    allocation: str
    _ops: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def r(self) -> int:
        return sum(U.shape[0] for U in self.blocks)

    @property
    def row_offsets(self) -> tuple:
        offs, acc = [], 0
        for U in self.blocks:
            offs.append(acc)
            acc += U.shape[0]
        return tuple(offs)

    def assembled(self) -> np.ndarray:
        """The block-diagonal r x K vertex embedding matrix."""
        dtype = np.result_type(*(U.dtype for U in self.blocks))
        W = np.zeros((self.r, self.schema.total_width), dtype=dtype)
        roffs = self.row_offsets
        coffs = self.schema.offsets
        for j, U in enumerate(self.blocks):
            W[roffs[j] : roffs[j] + U.shape[0], coffs[j] : coffs[j] + U.shape[1]] = U
        return W

    def embedding(self) -> VertexEmbeddingMatrix:
        prov = {
            "kind": "random-rademacher-blockdiag",
            "seed": self.seed,
            "scale": self.scale,
            "allocation": self.allocation,
        }
        return VertexEmbeddingMatrix(
            matrix=self.assembled(), schema=self.schema, provenance=prov
        )

    def operator(self, n: int) -> LevelOperator:
        op = self._ops.get(n)
        if op is None:
            op = LevelOperator(
                blocks=self.blocks,
                n=n,
                row_offsets=self.row_offsets,
                total_rows=self.r,
            )
            self._ops[n] = op
        return op


def build_sensing(
    schema: AttributeSchema,
    r: int,
    seed: int | None = 0,
    allocation: str = "proportional",
    scale: float = 1.0,
) -> BlockSensingMatrix:
    """Sample per-attribute Rademacher blocks with rows split by allocation.

    Integer scale keeps the blocks in int64 so downstream identities are
    exact; fractional scales produce float64 blocks.
    """
    rows = allocate_rows(schema, r, allocation)
    rng = np.random.default_rng(seed)
    integer = float(scale).is_integer()
    blocks = []
    for r_j, k_j in zip(rows, schema.cardinalities):
        signs = rng.choice((-1, 1), size=(r_j, k_j))
        if integer:
            blocks.append((int(scale) * signs).astype(np.int64))
        else:
            blocks.append(scale * signs.astype(np.float64))
    return BlockSensingMatrix(
        schema=schema,
        blocks=tuple(blocks),
        scale=float(scale),
        seed=seed,
        allocation=allocation,
    )


def verify_identity(g: MolecularGraph, B: BlockSensingMatrix, T: int):
    """Max |level embedding - operator @ counts| per level, n = 1..T.

    Uses the distinct-value walk set on both sides; with integer blocks the
    residuals are exactly zero.
    """
    stats = count_statistics(g, B.schema, T)
    F = embed_vertices(g, B.embedding())
    levels = walk_products_distinct(g, B.schema, F, T)
    residuals = []
    for n in range(1, T + 1):
        lhs = levels[n - 1]
        rhs = B.operator(n).matvec(stats.level(n))
        residuals.append(float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0)
    return residuals
