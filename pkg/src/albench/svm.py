"""From-scratch linear SVM trained by seeded stochastic subgradient descent.

Minimizes  lam/2 * ||w||^2 + (1/N) * sum_i max(0, 1 - y_i (w.x_i + b))
with lam = 1 / (C * N), step size 1/(lam * t), and per-epoch seeded
shuffling (Pegasos-style); the step counter starts one virtual epoch in so
the opening steps are sized ~C rather than ~C*N. The bias is an
unregularized extra coordinate, so it takes the same step but no shrink.
Training is single-threaded and bit-deterministic for a fixed seed and
example order.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .features import FeatureVector, file_sha256

MODEL_SCHEMA_VERSION = 1

POSITIVE = 1
NEGATIVE = -1

# Fold the running shrink factor into the weight table before it underflows.
_RESCALE_FLOOR = 1e-9


class TrainingError(ValueError):
    """Raised for degenerate training sets (single class, all-zero vectors)."""


@dataclass(frozen=True)
class TrainConfig:
    regularization_c: float = 1.0
    epochs: int = 50
    seed: int = 0
    tolerance: float = 1e-4  # early stop on per-epoch objective change

    def __post_init__(self):
        if self.regularization_c <= 0:
            raise ValueError("regularization_c must be positive")
        if self.epochs <= 0:
            raise ValueError("epochs must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class TrainingReport:
    epochs_run: int
    initial_objective: float
    final_objective: float
    converged: bool


@dataclass
class LinearModel:
    """Separating hyperplane w.x + b = 0 with the cached weight norm."""

    weights: dict[int, float]
    bias: float
    weight_norm: float
    n_features: int = 0
    config: TrainConfig | None = None
    report: TrainingReport | None = None


@dataclass(frozen=True)
class Score:
    decision_value: float
    distance: float
    label: int  # POSITIVE or NEGATIVE


def vectors_to_csr(vectors: Sequence[FeatureVector], n_features: int) -> sparse.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vectors:
        for i, w in vec.components.items():
            indices.append(i)
            data.append(w)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
        shape=(len(vectors), n_features),
    )


def objective(w: np.ndarray, bias: float, X: sparse.csr_matrix, y: np.ndarray, lam: float) -> float:
    """Regularized empirical hinge loss of (w, bias)."""
    margins = y * (X.dot(w) + bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return 0.5 * lam * float(w @ w) + float(hinge)


def subgradient(
    w: np.ndarray, bias: float, X: sparse.csr_matrix, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Subgradient of :func:`objective` at (w, bias); the true gradient away from kinks."""
    margins = y * (X.dot(w) + bias)
    violated = margins < 1.0
    grad_w = lam * w
    grad_b = 0.0
    if violated.any():
        yv = y[violated]
        grad_w -= np.asarray(X[violated].T.dot(yv)).ravel() / len(y)
        grad_b = -float(yv.sum()) / len(y)
    return grad_w, grad_b


def _infer_dim(vectors: Sequence[FeatureVector]) -> int:
    top = -1
    for vec in vectors:
        if vec.components:
            top = max(top, max(vec.components))
    return top + 1


def train(
    examples: Sequence[tuple[FeatureVector, int]],
    config: TrainConfig = TrainConfig(),
    n_features: int | None = None,
) -> LinearModel:
    """Train on (vector, label) pairs with labels in {+1, -1}.

    Deterministic for a fixed (example order, config). The returned model
    carries a report with the epochs run and final objective value.
    """
    if not examples:
        raise TrainingError("degenerate training set: no examples")
    labels = {y for _, y in examples}
    if labels != {POSITIVE, NEGATIVE}:
        raise TrainingError(f"degenerate training set: labels {sorted(labels)}, need both +1 and -1")
    if all(not vec.components for vec, _ in examples):
        raise TrainingError("degenerate training set: all vectors are zero")

    n = len(examples)
    dim = n_features if n_features is not None else _infer_dim([v for v, _ in examples])
    lam = 1.0 / (config.regularization_c * n)

    ex_idx = [np.fromiter(vec.components.keys(), dtype=np.int64, count=len(vec.components)) for vec, _ in examples]
    ex_val = [np.fromiter(vec.components.values(), dtype=np.float64, count=len(vec.components)) for vec, _ in examples]
    y = np.asarray([label for _, label in examples], dtype=np.float64)
    X = vectors_to_csr([vec for vec, _ in examples], dim)

    v = np.zeros(dim, dtype=np.float64)
    scale = 1.0
    bias = 0.0
    # Start the step counter one virtual epoch in: a raw 1/(lam*t) schedule
    # opens with a step of size C*N, and the unregularized bias then needs
    # exp(N/minority-class) epochs to walk back on imbalanced data.
    t = n
    rng = random.Random(config.seed)
    order = list(range(n))

    initial_objective = objective(v, bias, X, y, lam)
    # compare consecutive epoch objectives only: the w=0 starting value can
    # coincide with an epoch value long before anything has converged
    prev_objective = float("inf")
    final_objective = initial_objective
    converged = False
    epochs_run = 0

    for _ in range(config.epochs):
        epochs_run += 1
        rng.shuffle(order)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            idx = ex_idx[i]
            margin = y[i] * (scale * float(v[idx] @ ex_val[i]) + bias)
            scale *= 1.0 - eta * lam  # eta*lam = 1/t < 1 since t > n
            if scale < _RESCALE_FLOOR:
                v *= scale
                scale = 1.0
            if margin < 1.0:
                v[idx] += (eta * y[i] / scale) * ex_val[i]
                bias += eta * y[i]
        final_objective = objective(scale * v, bias, X, y, lam)
        if abs(prev_objective - final_objective) < config.tolerance:
            converged = True
            break
        prev_objective = final_objective

    w = scale * v
    weight_norm = float(np.sqrt(w @ w))
    if weight_norm == 0.0:
        raise TrainingError("training produced a zero weight vector")
    nz = np.nonzero(w)[0]
    return LinearModel(
        weights={int(i): float(w[i]) for i in nz},
        bias=float(bias),
        weight_norm=weight_norm,
        n_features=dim,
        config=config,
        report=TrainingReport(
            epochs_run=epochs_run,
            initial_objective=float(initial_objective),
            final_objective=float(final_objective),
            converged=converged,
        ),
    )


def score(model: LinearModel, vec: FeatureVector) -> Score:
    """Decision value w.x + b, signed distance, and the predicted label.

    An exact zero decision value maps to the negative label (the rare
    class is positive, so ties follow the base rate).
    """
    decision = model.bias
    weights = model.weights
    for i, x in vec.components.items():
        w = weights.get(i)
        if w is not None:
            decision += w * x
    distance = decision / model.weight_norm
    label = POSITIVE if decision > 0.0 else NEGATIVE
    return Score(decision_value=decision, distance=distance, label=label)


def save_model(model: LinearModel, path: str | Path, vocabulary_path: str | Path | None = None) -> None:
    vocab_ref = None
    if vocabulary_path is not None:
        vocab_ref = {"path": str(vocabulary_path), "sha256": file_sha256(vocabulary_path)}
    payload = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "config": asdict(model.config) if model.config else None,
        "vocabulary": vocab_ref,
        "bias": model.bias,
        "weights": [[i, w] for i, w in sorted(model.weights.items())],
        "weight_norm": model.weight_norm,
        "n_features": model.n_features,
        "training_report": asdict(model.report) if model.report else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path: str | Path) -> LinearModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"model schema_version {payload.get('schema_version')!r} unsupported")
    config = TrainConfig(**payload["config"]) if payload.get("config") else None
    report = TrainingReport(**payload["training_report"]) if payload.get("training_report") else None
    return LinearModel(
        weights={int(i): float(w) for i, w in payload["weights"]},
        bias=float(payload["bias"]),
        weight_norm=float(payload["weight_norm"]),
        n_features=int(payload.get("n_features", 0)),
        config=config,
        report=report,
    )
