"""Regularized linear models (logistic / least squares) and ranking metrics.

Fitting is deterministic full-batch gradient descent with Armijo
backtracking on the penalized objective; the accepted step never increases
the objective. The penalty is either the squared l2 norm (smooth, default)
or the plain l2 norm, whose subgradient at zero is taken as zero. The
intercept is never penalized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

TASKS = ("logistic", "least-squares")
PENALTIES = ("squared-l2", "unsquared-l2")


class DegenerateLabels(ValueError):
    pass


@dataclass
class FitReport:
    iterations: int = 0
    objective: float = float("nan")
    grad_norm: float = float("nan")
    converged: bool = False
    objective_trace: list = field(default_factory=list, repr=False)


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    task: str
    lam: float
    penalty: str
    report: FitReport = field(default_factory=FitReport)
    manifest_hash: str | None = None

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        z = self.decision(X)
        if self.task == "logistic":
            return _sigmoid(z)
        return z

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "task": self.task,
            "lambda": self.lam,
            "penalty": self.penalty,
            "manifest_hash": self.manifest_hash,
            "fit_report": {
                "iterations": self.report.iterations,
                "objective": self.report.objective,
                "grad_norm": self.report.grad_norm,
                "converged": self.report.converged,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        rep = FitReport(**{k: doc.get("fit_report", {}).get(k, v) for k, v in
                           dict(iterations=0, objective=float("nan"),
                                grad_norm=float("nan"), converged=False).items()})
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            task=doc["task"],
            lam=float(doc["lambda"]),
            penalty=doc["penalty"],
            report=rep,
            manifest_hash=doc.get("manifest_hash"),
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        return cls.from_dict(json.loads(text))


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log1pexp(z):
    # log(1 + e^z), stable on both tails
    out = np.where(z > 0, z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return out


def _objective_and_grad(theta, X, y, task, lam, penalty):
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    n = X.shape[0]
    if task == "logistic":
        sign = 2.0 * y - 1.0
        loss = float(np.mean(_log1pexp(-sign * z)))
        resid = _sigmoid(z) - y
    else:
        diff = z - y
        loss = float(0.5 * np.mean(diff * diff))
        resid = diff
    gw = X.T @ resid / n
    gb = float(resid.mean())

    wnorm = float(np.linalg.norm(w))
    if penalty == "squared-l2":
        loss += lam * wnorm ** 2
        gw = gw + 2.0 * lam * w
    else:
        loss += lam * wnorm
        if wnorm > 0:
            gw = gw + lam * w / wnorm
    grad = np.concatenate([gw, [gb]])
    return loss, grad


def fit(
    X: np.ndarray,
    y: np.ndarray,
    task: str = "logistic",
    lam: float = 1e-3,
    penalty: str = "squared-l2",
    max_iter: int = 2000,
    grad_tol: float = 1e-8,
    seed: int | None = None,
) -> LinearModel:
    """Minimize mean loss + penalty by descent with backtracking line search.

    ``seed`` is accepted for pipeline plumbing but the solve itself is
    deterministic (zero initialization).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}")
    if penalty not in PENALTIES:
        raise ValueError(f"penalty must be one of {PENALTIES}")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite rows")
    if task == "logistic":
        classes = np.unique(y)
        if not np.isin(classes, (0.0, 1.0)).all():
            raise ValueError("logistic task needs labels in {0, 1}")
        if classes.size < 2:
            raise DegenerateLabels("labels contain a single class")

    theta = np.zeros(X.shape[1] + 1)
    obj, grad = _objective_and_grad(theta, X, y, task, lam, penalty)
    report = FitReport(objective_trace=[obj])
    step = 1.0
    prev_theta = prev_grad = None
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            report.converged = True
            break
        # Barzilai-Borwein trial step; backtracking below keeps descent safe.
        if prev_grad is not None:
            s = theta - prev_theta
            dg = grad - prev_grad
            denom = float(s @ dg)
            if denom > 0:
                step = float(s @ s) / denom
        step = float(np.clip(step * 2.0, 1e-12, 1e8))
        accepted = False
        prev_theta, prev_grad = theta, grad
        for _ in range(80):
            cand = theta - step * grad
            cand_obj, cand_grad = _objective_and_grad(cand, X, y, task, lam, penalty)
            if cand_obj <= obj - 1e-4 * step * gnorm * gnorm:
                theta, obj, grad = cand, cand_obj, cand_grad
                accepted = True
                break
            step *= 0.5
        report.iterations = it
        report.objective_trace.append(obj)
        if not accepted:
            # step underflow: no descent direction left at this precision
            break
    report.objective = obj
    report.grad_norm = float(np.linalg.norm(grad))
    report.converged = report.converged or report.grad_norm <= grad_tol
    return LinearModel(
        weights=theta[:-1].copy(),
        intercept=float(theta[-1]),
        task=task,
        lam=lam,
        penalty=penalty,
        report=report,
    )


# -- metrics --------------------------------------------------------------------

METRICS = ("rmse", "mae", "roc-auc", "pr-auc")


def rmse(y_true, y_pred) -> float:
    d = np.asarray(y_pred, dtype=np.float64) - np.asarray(y_true, dtype=np.float64)
    return float(np.sqrt(np.mean(d * d)))


def mae(y_true, y_pred) -> float:
    d = np.asarray(y_pred, dtype=np.float64) - np.asarray(y_true, dtype=np.float64)
    return float(np.mean(np.abs(d)))


def roc_auc(y_true, scores) -> float | None:
    """Rank-statistic AUC with midranks for ties; None on single-class input."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    npos = int(y.sum())
    nneg = y.size - npos
    if npos == 0 or nneg == 0:
        return None
    ranks = rankdata(s)  # average ranks on ties
    return float((ranks[y].sum() - npos * (npos + 1) / 2.0) / (npos * nneg))


def pr_auc(y_true, scores) -> float | None:
    """Step integration of the precision-recall curve over score thresholds."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    npos = int(y.sum())
    if npos == 0 or npos == y.size:
        return None
    order = np.argsort(-s, kind="mergesort")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # evaluate only at the last index of each tied-score group
    last = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp, fp = tp[last], fp[last]
    precision = tp / (tp + fp)
    recall = tp / npos
    prev_recall = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev_recall) * precision))


def compute_metric(name: str, y_true, scores) -> float | None:
    name = name.lower()
    if name == "rmse":
        return rmse(y_true, scores)
    if name == "mae":
        return mae(y_true, scores)
    if name == "roc-auc":
        return roc_auc(y_true, scores)
    if name == "pr-auc":
        return pr_auc(y_true, scores)
    raise ValueError(f"unknown metric {name!r}; choose from {METRICS}")


def evaluate(model: LinearModel, X, y, metric: str) -> float | None:
    scores = model.decision(np.asarray(X, dtype=np.float64))
    return compute_metric(metric, y, scores)
