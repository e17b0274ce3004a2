"""Logistic-regression and linear-SVM sentence classifiers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import ClassLabel


class DivergenceError(RuntimeError):
    def __init__(self, model: str, epoch: int):
        super().__init__(f"{model} training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("softmax requires finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass
class LinearTrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0


@dataclass
class LinearModel:
    kind: str  # "logistic" or "svm"
    weights: np.ndarray  # (classes, feature_dim)
    bias: np.ndarray  # (classes,)
    config: LinearTrainConfig = field(default_factory=LinearTrainConfig)


def features_to_matrix(feature_vectors: list[dict[int, float]], dim: int) -> np.ndarray:
    x = np.zeros((len(feature_vectors), dim))
    for row, fv in enumerate(feature_vectors):
        for idx, weight in fv.items():
            x[row, idx] = weight
    return x


def _logistic_loss_grad(w, b, x, y_onehot, l2):
    scores = x @ w.T + b
    probs = softmax(scores)
    n = x.shape[0]
    log_probs = np.log(np.clip(probs[np.arange(n), y_onehot.argmax(axis=1)], 1e-300, None))
    loss = -log_probs.mean() + 0.5 * l2 * float((w * w).sum())
    diff = (probs - y_onehot) / n
    return loss, diff.T @ x + l2 * w, diff.sum(axis=0)


def _svm_loss_grad(w, b, x, y_onehot, l2):
    # One-vs-rest hinge: sign targets +1 for the true class, -1 elsewhere.
    signs = 2.0 * y_onehot - 1.0
    scores = x @ w.T + b
    margins = 1.0 - signs * scores
    active = margins > 0
    n = x.shape[0]
    loss = margins[active].sum() / n + 0.5 * l2 * float((w * w).sum())
    dscores = np.where(active, -signs, 0.0) / n
    return loss, dscores.T @ x + l2 * w, dscores.sum(axis=0)


def train_linear(
    features: list[dict[int, float]],
    labels: list[ClassLabel],
    dim: int,
    kind: str = "logistic",
    config: LinearTrainConfig | None = None,
) -> LinearModel:
    """Fit by full-batch (sub)gradient descent with an L2 penalty on weights."""
    if kind not in ("logistic", "svm"):
        raise ValueError(f"unknown linear model kind {kind!r}")
    if not features:
        raise ValueError("empty training set")
    if len(features) != len(labels):
        raise ValueError("features/labels length mismatch")
    config = config or LinearTrainConfig()
    n_classes = len(ClassLabel)
    x = features_to_matrix(features, dim)
    y_onehot = np.zeros((len(labels), n_classes))
    y_onehot[np.arange(len(labels)), [int(l) for l in labels]] = 1.0

    w = np.zeros((n_classes, dim))
    b = np.zeros(n_classes)
    loss_grad = _logistic_loss_grad if kind == "logistic" else _svm_loss_grad
    for epoch in range(config.epochs):
        loss, dw, db = loss_grad(w, b, x, y_onehot, config.l2)
        if not np.isfinite(loss):
            raise DivergenceError(kind, epoch)
        w -= config.learning_rate * dw
        b -= config.learning_rate * db
    return LinearModel(kind, w, b, config)


def decision_scores(model: LinearModel, features: dict[int, float]) -> np.ndarray:
    scores = model.bias.copy()
    dim = model.weights.shape[1]
    for idx, weight in features.items():
        if idx >= dim:
            raise ValueError(f"feature index {idx} out of range for model dim {dim}")
        scores += model.weights[:, idx] * weight
    return scores


def predict_linear(model: LinearModel, features: dict[int, float]) -> tuple[ClassLabel, np.ndarray]:
    """Argmax class plus a softmax-of-scores probability vector.

    For the SVM the probabilities are a diagnostic softmax over margins.
    """
    scores = decision_scores(model, features)
    return ClassLabel(int(np.argmax(scores))), softmax(scores)
