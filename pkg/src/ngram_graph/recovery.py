"""Sparse recovery of count vectors from level embeddings.

Two solvers: greedy correlation pursuit with a nonnegative least-squares
refit each step, and iterative soft thresholding on the l1 relaxation with
an annealed threshold and a final support refit. Counts are nonnegative
integers, so an estimate within 0.5 of the truth in every coordinate rounds
to an exact recovery.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .counts import level_dimension
from .schema import AttributeSchema
from .sensing import LevelOperator, build_sensing


@dataclass
class RecoveryResult:
    c_hat: np.ndarray
    residual_norm: float
    support: tuple
    converged: bool
    method: str
    iterations: int

    @property
    def approximate(self) -> bool:
        return not self.converged


def _operator_interface(op):
    """Accept either a LevelOperator or a plain dense matrix."""
    if isinstance(op, LevelOperator):
        return op.shape, op.correlations, op.column_norms(), (
            lambda cols: np.stack([op.column(int(c)) for c in cols], axis=1)
        )
    A = np.asarray(op, dtype=np.float64)
    norms = np.linalg.norm(A, axis=0)
    return A.shape, (lambda res: A.T @ res), norms, (lambda cols: A[:, cols])


def omp_recover(
    f: np.ndarray,
    op,
    sparsity: int,
    tol: float = 1e-9,
) -> RecoveryResult:
    """Greedy pursuit: pick the best-correlated column, NNLS-refit, repeat."""
    (rows, ncols), correlate, norms, take = _operator_interface(op)
    f = np.asarray(f, dtype=np.float64)
    residual = f.copy()
    support: list[int] = []
    safe = np.where(norms > 0, norms, 1.0)
    coef = np.zeros(0)
    fnorm = max(np.linalg.norm(f), 1.0)
    it = 0
    for it in range(1, int(sparsity) + 1):
        if np.linalg.norm(residual) <= tol * fnorm:
            break
        corr = np.abs(correlate(residual)) / safe
        corr[support] = -np.inf
        pick = int(np.argmax(corr))
        if not np.isfinite(corr[pick]):
            break
        support.append(pick)
        A_s = take(support).astype(np.float64)
        coef, _ = nnls(A_s, f)
        residual = f - A_s @ coef
    c_hat = np.zeros(ncols)
    for s, x in zip(support, coef):
        c_hat[s] = x
    res_norm = float(np.linalg.norm(residual))
    return RecoveryResult(
        c_hat=c_hat,
        residual_norm=res_norm,
        support=tuple(int(s) for s in np.nonzero(c_hat > 0)[0]),
        converged=res_norm <= tol * fnorm or res_norm <= 1e-9,
        method="omp",
        iterations=it,
    )


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def ista_recover(
    f: np.ndarray,
    op,
    tol: float = 1e-9,
    max_iter: int = 2000,
    anneal: float = 0.5,
    phases: int = 12,
    support_threshold: float = 0.25,
) -> RecoveryResult:
    """Soft thresholding on the l1 program with annealed threshold.

    The operator must be materializable; huge levels should use the greedy
    solver instead. After the threshold schedule, the detected support is
    refit by nonnegative least squares.
    """
    if isinstance(op, LevelOperator):
        A = op.materialize().astype(np.float64)
    else:
        A = np.asarray(op, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if A.shape[1] == 0:
        return RecoveryResult(
            c_hat=np.zeros(0), residual_norm=float(np.linalg.norm(f)),
            support=(), converged=True, method="ista", iterations=0,
        )
    L = np.linalg.norm(A, 2) ** 2
    if L == 0:
        L = 1.0
    step = 1.0 / L
    x = np.zeros(A.shape[1])
    mu = 0.9 * float(np.max(np.abs(A.T @ f))) if f.any() else 0.0
    fnorm = max(np.linalg.norm(f), 1.0)
    it = 0
    per_phase = max(1, max_iter // max(phases, 1))
    for _ in range(phases):
        for _ in range(per_phase):
            it += 1
            grad = A.T @ (A @ x - f)
            x = _soft(x - step * grad, step * mu)
        mu *= anneal
        if np.linalg.norm(f - A @ x) <= tol * fnorm:
            break
    support = np.nonzero(np.abs(x) > support_threshold)[0]
    c_hat = np.zeros(A.shape[1])
    if support.size:
        coef, _ = nnls(A[:, support], f)
        c_hat[support] = coef
    res_norm = float(np.linalg.norm(f - A @ c_hat))
    return RecoveryResult(
        c_hat=c_hat,
        residual_norm=res_norm,
        support=tuple(int(s) for s in np.nonzero(c_hat > 0)[0]),
        converged=res_norm <= tol * fnorm or res_norm <= 1e-9,
        method="ista",
        iterations=it,
    )


def sparse_recover(f, op, method: str = "omp", sparsity: int | None = None, **kw):
    if method == "omp":
        if sparsity is None:
            raise ValueError("omp needs a sparsity budget")
        return omp_recover(f, op, sparsity, **kw)
    if method == "ista":
        return ista_recover(f, op, **kw)
    raise ValueError(f"unknown recovery method {method!r}")


# -- Monte-Carlo experiment ----------------------------------------------------


@dataclass(frozen=True)
class RecoveryConfig:
    r_values: tuple = (100, 200, 400, 800)
    k_values: tuple = (40,)
    n_values: tuple = (2,)
    s_values: tuple = (5,)
    trials: int = 100
    method: str = "omp"
    seed: int = 0
    entry_low: int = 1
    entry_high: int = 4
    allocation: str = "proportional"
    max_iter: int = 2000  # thresholding-solver iteration cap

    @classmethod
    def from_dict(cls, doc: dict) -> "RecoveryConfig":
        known = {f for f in cls.__dataclass_fields__}
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items() if k in known}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown recovery config keys: {sorted(unknown)}")
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "RecoveryConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class RecoveryCell:
    r: int
    k: int
    n: int
    s: int
    trials: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def _single_attribute_schema(k: int) -> AttributeSchema:
    return AttributeSchema.from_pairs(
        [("value", tuple(f"v{i}" for i in range(k)))], name=f"synthetic-k{k}"
    )


def run_trial(r: int, k: int, n: int, s: int, method: str, rng,
              entry_low: int = 1, entry_high: int = 4,
              allocation: str = "proportional", max_iter: int = 2000) -> bool:
    """One draw: sample sensing + sparse integer counts, measure, recover."""
    schema = _single_attribute_schema(k)
    dim = level_dimension(schema, n)
    if s > dim:
        return False
    sensing = build_sensing(
        schema, r, seed=int(rng.integers(2**32)), scale=r**-0.5,
        allocation=allocation,
    )
    op = sensing.operator(n)
    c = np.zeros(dim)
    if s:
        support = rng.choice(dim, size=s, replace=False)
        c[support] = rng.integers(entry_low, entry_high + 1, size=s)
    f = op.matvec(c)
    if method == "omp":
        result = sparse_recover(f, op, method="omp", sparsity=s)
    else:
        result = sparse_recover(f, op, method=method, max_iter=max_iter)
    true_support = set(np.nonzero(c)[0])
    found_support = set(np.nonzero(np.abs(result.c_hat) > 0.25)[0])
    return found_support == true_support and float(np.max(np.abs(result.c_hat - c))) < 0.5


def _trial_worker(args):
    cfg, r, k, n, s, t = args
    rng = np.random.default_rng([cfg.seed, r, k, n, s, t])
    return run_trial(
        r, k, n, s, cfg.method, rng,
        entry_low=cfg.entry_low, entry_high=cfg.entry_high,
        allocation=cfg.allocation, max_iter=cfg.max_iter,
    )


def recovery_experiment(cfg: RecoveryConfig, jobs: int = 1):
    """Success-rate grid over (r, k, n, s).

    Every trial owns a seed derived from its cell coordinates, so results do
    not depend on scheduling; with ``jobs > 1`` trials run in a process pool.
    """
    combos = [
        (r, k, n, s)
        for r in cfg.r_values
        for k in cfg.k_values
        for n in cfg.n_values
        for s in cfg.s_values
    ]
    work = [
        (cfg, r, k, n, s, t)
        for (r, k, n, s) in combos
        for t in range(cfg.trials)
    ]
    if jobs > 1 and len(work) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_trial_worker, work, chunksize=8))
    else:
        outcomes = [_trial_worker(w) for w in work]
    cells: list[RecoveryCell] = []
    for i, (r, k, n, s) in enumerate(combos):
        wins = sum(outcomes[i * cfg.trials : (i + 1) * cfg.trials])
        cells.append(
            RecoveryCell(r=r, k=k, n=n, s=s, trials=cfg.trials, successes=int(wins))
        )
    return cells


CSV_COLUMNS = ("r", "k", "n", "s", "trials", "successes")


def write_cells_csv(path, cells) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for c in cells:
            writer.writerow([c.r, c.k, c.n, c.s, c.trials, c.successes])


def summarize_cells(cells) -> str:
    lines = ["r      k    n  s   rate"]
    for c in cells:
        lines.append(f"{c.r:<6d} {c.k:<4d} {c.n:<2d} {c.s:<3d} {c.rate:.3f}")
    return "\n".join(lines)
