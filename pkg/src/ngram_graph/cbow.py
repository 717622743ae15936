"""Neighbor-context training of the vertex embedding matrix.

Each non-isolated vertex yields one sample: predict its attributes from the
aggregate of its neighbors' embeddings. The predictor is W followed by a
small rectifier MLP whose K outputs are split into per-attribute blocks,
each scored with softmax cross-entropy. Training is mini-batch Adam on all
parameters (W included), in float64, fully deterministic given the seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .schema import AttributeSchema
from .vertex import VertexEmbeddingMatrix


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class ContextSample:
    """One prediction target: attribute value indices of a vertex plus the
    summed one-hot vector of its neighborhood."""

    target: np.ndarray        # (S,) value indices
    context: np.ndarray       # (K,) summed one-hot counts
    context_size: int


@dataclass(frozen=True)
class CbowConfig:
    r: int = 100
    aggregator: str = "sum"   # "sum" or "mean"
    hidden: tuple[int, ...] = (100,)
    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0
    holdout_fraction: float = 0.1

    def __post_init__(self):
        if not self.hidden:
            raise ValueError("hidden layer list must be nonempty")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.aggregator not in ("sum", "mean"):
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def config_hash(self) -> str:
        payload = json.dumps(
            {
                "r": self.r,
                "aggregator": self.aggregator,
                "hidden": list(self.hidden),
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "learning_rate": self.learning_rate,
                "seed": self.seed,
            },
            sort_keys=True,
        ).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class TrainingReport:
    epoch_losses: list = field(default_factory=list)
    holdout_accuracy: dict = field(default_factory=dict)  # attribute name -> accuracy
    mean_accuracy: float | None = None
    num_samples: int = 0
    num_holdout: int = 0


def extract_contexts(graphs, schema: AttributeSchema) -> list[ContextSample]:
    """One sample per non-isolated vertex; isolated vertices are skipped."""
    offs = np.asarray(schema.offsets, dtype=np.int64)
    K = schema.total_width
    samples: list[ContextSample] = []
    for g in graphs:
        degs = g.degrees()
        hot = offs[None, :] + g.attr  # (m, S) one-hot indices per vertex
        for i in range(g.num_vertices):
            if degs[i] == 0:
                continue
            ctx = np.zeros(K, dtype=np.float64)
            nbrs = g.neighbors(i)
            np.add.at(ctx, hot[nbrs].ravel(), 1.0)
            samples.append(
                ContextSample(
                    target=g.attr[i].copy(),
                    context=ctx,
                    context_size=int(degs[i]),
                )
            )
    return samples


class CbowNetwork:
    """W plus a rectifier MLP mapping r -> hidden... -> K logits."""

    def __init__(self, schema: AttributeSchema, cfg: CbowConfig, rng: np.random.Generator):
        self.schema = schema
        self.cfg = cfg
        K = schema.total_width
        sizes = [cfg.r, *cfg.hidden, K]
        # W gets the same spread as a random embedding so epoch-0 output is
        # directly usable; MLP layers get He-style fan-in scaling.
        self.W = rng.standard_normal((cfg.r, K)) * (cfg.r ** -0.5)
        self.layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            A = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
            b = np.zeros(fan_out)
            self.layers.append([A, b])

    # -- parameter plumbing (used by Adam and by finite-difference checks) ----

    def parameters(self) -> list[np.ndarray]:
        out = [self.W]
        for A, b in self.layers:
            out.extend((A, b))
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat(self, flat: np.ndarray) -> None:
        pos = 0
        for p in self.parameters():
            n = p.size
            p[...] = flat[pos : pos + n].reshape(p.shape)
            pos += n

    # -- forward / backward ----------------------------------------------------

    def _inputs(self, contexts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
        if self.cfg.aggregator == "mean":
            return contexts / sizes[:, None]
        return contexts

    def forward(self, contexts: np.ndarray, sizes: np.ndarray):
        S_in = self._inputs(contexts, sizes)
        acts = [S_in @ self.W.T]  # (B, r)
        for li, (A, b) in enumerate(self.layers):
            z = acts[-1] @ A.T + b
            if li < len(self.layers) - 1:
                z = np.maximum(z, 0.0)
            acts.append(z)
        return acts, S_in

    def loss_and_grads(self, contexts, sizes, targets):
        """Mean per-sample loss (summed over attribute blocks) and gradients."""
        B = contexts.shape[0]
        acts, S_in = self.forward(contexts, sizes)
        logits = acts[-1]

        dlogits = np.zeros_like(logits)
        loss = 0.0
        for j, off in enumerate(self.schema.offsets):
            k = self.schema.cardinalities[j]
            block = logits[:, off : off + k]
            block = block - block.max(axis=1, keepdims=True)
            expz = np.exp(block)
            p = expz / expz.sum(axis=1, keepdims=True)
            rows = np.arange(B)
            tj = targets[:, j]
            loss -= np.log(np.maximum(p[rows, tj], 1e-300)).sum()
            grad = p.copy()
            grad[rows, tj] -= 1.0
            dlogits[:, off : off + k] = grad / B
        loss /= B

        grads = []
        delta = dlogits
        for li in range(len(self.layers) - 1, -1, -1):
            A, _ = self.layers[li]
            a_prev = acts[li]
            gA = delta.T @ a_prev
            gb = delta.sum(axis=0)
            grads.append((li, gA, gb))
            delta = delta @ A
            if li > 0:
                delta = delta * (a_prev > 0)
        gW = delta.T @ S_in
        grad_list = [gW]
        for li, gA, gb in sorted(grads):
            grad_list.extend((gA, gb))
        return loss, grad_list

    def predict_blocks(self, contexts, sizes) -> np.ndarray:
        """Argmax value index per attribute block, shape (B, S)."""
        acts, _ = self.forward(contexts, sizes)
        logits = acts[-1]
        out = np.empty((contexts.shape[0], self.schema.num_attributes), dtype=np.int64)
        for j, off in enumerate(self.schema.offsets):
            k = self.schema.cardinalities[j]
            out[:, j] = logits[:, off : off + k].argmax(axis=1)
        return out


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train_cbow(
    samples: list[ContextSample],
    schema: AttributeSchema,
    cfg: CbowConfig | None = None,
    dataset_id: str = "unnamed",
):
    """Fit W on context samples; returns (VertexEmbeddingMatrix, TrainingReport)."""
    cfg = cfg or CbowConfig()
    if not samples:
        raise ValueError("no context samples to train on")
    rng = np.random.default_rng(cfg.seed)
    net = CbowNetwork(schema, cfg, rng)

    contexts = np.stack([s.context for s in samples])
    sizes = np.asarray([s.context_size for s in samples], dtype=np.float64)
    targets = np.stack([s.target for s in samples])

    n = len(samples)
    n_hold = int(round(cfg.holdout_fraction * n)) if n > 1 else 0
    order = rng.permutation(n)
    hold, train = order[:n_hold], order[n_hold:]
    if train.size == 0:
        train, hold = order, order[:0]

    report = TrainingReport(num_samples=int(train.size), num_holdout=int(hold.size))

    # Adam state
    params = net.parameters()
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    for epoch in range(cfg.epochs):
        epoch_loss = 0.0
        seen = 0
        for idx in _batches(train.size, cfg.batch_size, rng):
            batch = train[idx]
            loss, grads = net.loss_and_grads(contexts[batch], sizes[batch], targets[batch])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch)
            step += 1
            for p, g, ms, vs in zip(params, grads, m_state, v_state):
                ms *= beta1
                ms += (1 - beta1) * g
                vs *= beta2
                vs += (1 - beta2) * g * g
                mhat = ms / (1 - beta1 ** step)
                vhat = vs / (1 - beta2 ** step)
                p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
            epoch_loss += loss * batch.size
            seen += batch.size
        report.epoch_losses.append(epoch_loss / max(seen, 1))

    eval_idx = hold if hold.size else train
    if eval_idx.size:
        pred = net.predict_blocks(contexts[eval_idx], sizes[eval_idx])
        correct = pred == targets[eval_idx]
        for j, name in enumerate(schema.attribute_names):
            report.holdout_accuracy[name] = float(correct[:, j].mean())
        report.mean_accuracy = float(np.mean(list(report.holdout_accuracy.values())))

    prov = {
        "kind": "trained",
        "dataset_id": dataset_id,
        "config_hash": cfg.config_hash(),
        "epochs": cfg.epochs,
        "seed": cfg.seed,
    }
    emb = VertexEmbeddingMatrix(matrix=net.W.copy(), schema=schema, provenance=prov)
    return emb, report


def train_on_graphs(
    graphs,
    schema: AttributeSchema,
    cfg: CbowConfig | None = None,
    dataset_id: str = "unnamed",
):
    """Convenience wrapper: extract contexts then train. Labels are never read."""
    samples = extract_contexts(graphs, schema)
    return train_cbow(samples, schema, cfg, dataset_id=dataset_id)
