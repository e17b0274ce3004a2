"""Convolutional sentence classifier with from-scratch backpropagation.

Architecture: trainable embedding lookup (sequence length 64, embedding
width 80), three parallel valid-padding conv banks of heights 3/4/5 with
3 filters each, global max-pool, concat to a 9-vector, dropout 0.25, and
a fully-connected output layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import ClassLabel, EMBEDDING_DIM, SEQUENCE_LENGTH
from .linear import DivergenceError, softmax

CONV_HEIGHTS = (3, 4, 5)
N_FILTERS = 3
POOLED_WIDTH = N_FILTERS * len(CONV_HEIGHTS)  # 9


@dataclass
class CnnTrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 16
    dropout_rate: float = 0.25
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999


class Adam:
    """Plain Adam with bias correction; updates run in place."""

    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self._scratch = {k: np.empty_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1 - self.beta1**self.t
        bc2 = 1 - self.beta2**self.t
        for name, grad in grads.items():
            m, v, tmp = self.m[name], self.v[name], self._scratch[name]
            m *= self.beta1
            m += (1 - self.beta1) * grad
            v *= self.beta2
            np.multiply(grad, grad, out=tmp)
            tmp *= 1 - self.beta2
            v += tmp
            # p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
            np.divide(v, bc2, out=tmp)
            np.sqrt(tmp, out=tmp)
            tmp += self.eps
            np.divide(m, tmp, out=tmp)
            tmp *= self.lr / bc1
            self.params[name] -= tmp


class CnnModel:
    """Holds all trainable tensors; `conv_activation` is "relu" for the plain
    classifier and "leaky_relu" (slope 0.2) for the GAN discriminator."""

    LEAKY_SLOPE = 0.2

    def __init__(
        self,
        vocab_size: int,
        n_classes: int = len(ClassLabel),
        conv_activation: str = "relu",
        dropout_rate: float = 0.25,
        seed: int = 0,
        rng: np.random.Generator | None = None,
    ):
        if conv_activation not in ("relu", "leaky_relu"):
            raise ValueError(f"unknown activation {conv_activation!r}")
        rng = rng if rng is not None else np.random.default_rng(seed)
        self.vocab_size = vocab_size
        self.n_classes = n_classes
        self.conv_activation = conv_activation
        self.dropout_rate = dropout_rate
        self.seed = seed
        self.params: dict[str, np.ndarray] = {
            "embedding": rng.uniform(-0.05, 0.05, (vocab_size, EMBEDDING_DIM))
        }
        for h in CONV_HEIGHTS:
            fan_in = h * EMBEDDING_DIM
            self.params[f"conv{h}_w"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), (h, EMBEDDING_DIM, N_FILTERS))
            self.params[f"conv{h}_b"] = np.zeros(N_FILTERS)
        self.params["fc_w"] = rng.normal(0.0, np.sqrt(2.0 / POOLED_WIDTH), (POOLED_WIDTH, n_classes))
        self.params["fc_b"] = np.zeros(n_classes)

    def _activate(self, pre: np.ndarray) -> np.ndarray:
        if self.conv_activation == "relu":
            return np.maximum(pre, 0.0)
        return np.where(pre > 0, pre, self.LEAKY_SLOPE * pre)

    def _activate_grad(self, pre: np.ndarray) -> np.ndarray:
        if self.conv_activation == "relu":
            return (pre > 0).astype(np.float64)
        return np.where(pre > 0, 1.0, self.LEAKY_SLOPE)


@dataclass
class CnnForwardState:
    """Intermediates cached for backpropagation."""

    ids: np.ndarray | None
    embed: np.ndarray  # (N, 64, 80)
    conv_pre: dict[int, np.ndarray] = field(default_factory=dict)  # (N, L, 1, F)
    pool_argmax: dict[int, np.ndarray] = field(default_factory=dict)  # (N, F)
    pooled: np.ndarray | None = None  # (N, 9), pre-dropout
    feature_map: np.ndarray | None = None  # (N, 9), relu(pooled)
    dropout_mask: np.ndarray | None = None
    dropped: np.ndarray | None = None
    logits: np.ndarray | None = None
    layer_shapes: dict[str, tuple] = field(default_factory=dict)


def cnn_forward(
    model: CnnModel,
    ids: np.ndarray | None = None,
    embed: np.ndarray | None = None,
    train_mode: bool = False,
    dropout_mask: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> CnnForwardState:
    """Run the discriminator/classifier forward pass.

    Exactly one of `ids` (token-id batch, shape (N, 64)) or `embed` (a
    generated embedding batch, shape (N, 64, 80), bypassing the lookup)
    must be given. In train mode a dropout mask is applied to the pooled
    vector; pass one explicitly or supply `rng` to sample it.
    """
    if (ids is None) == (embed is None):
        raise ValueError("provide exactly one of ids or embed")
    if ids is not None:
        ids = np.asarray(ids)
        if ids.ndim == 1:
            ids = ids[None, :]
        if ids.shape[1] != SEQUENCE_LENGTH:
            raise ValueError(f"input layer: expected sequence length {SEQUENCE_LENGTH}, got {ids.shape[1]}")
        embed = model.params["embedding"][ids]
    else:
        embed = np.asarray(embed, dtype=np.float64)
        if embed.ndim == 2:
            embed = embed[None, :, :]
        if embed.shape[1:] != (SEQUENCE_LENGTH, EMBEDDING_DIM):
            raise ValueError(
                f"embedding layer: expected ({SEQUENCE_LENGTH}, {EMBEDDING_DIM}) input, got {embed.shape[1:]}"
            )
    n = embed.shape[0]
    state = CnnForwardState(ids=ids, embed=embed)
    state.layer_shapes["embed"] = embed.shape

    pooled_banks = []
    for h in CONV_HEIGHTS:
        w, b = model.params[f"conv{h}_w"], model.params[f"conv{h}_b"]
        length = SEQUENCE_LENGTH - h + 1
        pre = np.zeros((n, length, N_FILTERS))
        for d in range(h):
            pre += embed[:, d : d + length, :] @ w[d]
        pre += b
        pre = pre[:, :, None, :]  # Table-3 layout (N, L, 1, F)
        state.conv_pre[h] = pre
        act = model._activate(pre)
        state.layer_shapes[f"conv{h}"] = act.shape
        flat_act = act[:, :, 0, :]
        state.pool_argmax[h] = flat_act.argmax(axis=1)
        pooled = flat_act.max(axis=1)
        state.layer_shapes[f"pool{h}"] = (n, 1, 1, N_FILTERS)
        pooled_banks.append(pooled)

    pooled = np.concatenate(pooled_banks, axis=1)
    state.pooled = pooled
    state.layer_shapes["concat"] = (n, 1, 1, POOLED_WIDTH)
    state.feature_map = np.maximum(pooled, 0.0)

    if train_mode:
        if dropout_mask is None:
            if rng is None:
                raise ValueError("train mode needs a dropout mask or an rng")
            keep = 1.0 - model.dropout_rate
            dropout_mask = (rng.random(pooled.shape) < keep) / keep
        state.dropout_mask = dropout_mask
        dropped = pooled * dropout_mask
    else:
        dropped = pooled
    state.dropped = dropped
    state.layer_shapes["dropout"] = (n, 1, 1, POOLED_WIDTH)
    state.layer_shapes["flatten"] = dropped.shape

    state.logits = dropped @ model.params["fc_w"] + model.params["fc_b"]
    state.layer_shapes["logits"] = state.logits.shape
    return state


def cnn_backward(
    model: CnnModel,
    state: CnnForwardState,
    dlogits: np.ndarray,
    dfeature_map: np.ndarray | None = None,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Backpropagate logits (and optional feature-map) gradients.

    Returns (parameter grads, gradient w.r.t. the embedding batch); the
    latter feeds the generator when the input bypassed the lookup.
    """
    grads = {
        "fc_w": state.dropped.T @ dlogits,
        "fc_b": dlogits.sum(axis=0),
    }
    dpooled = dlogits @ model.params["fc_w"].T
    if state.dropout_mask is not None:
        dpooled = dpooled * state.dropout_mask
    if dfeature_map is not None:
        dpooled = dpooled + dfeature_map * (state.pooled > 0)

    dembed = np.zeros_like(state.embed)
    n = state.embed.shape[0]
    rows = np.arange(n)[:, None]
    cols = np.arange(N_FILTERS)[None, :]
    for bank, h in enumerate(CONV_HEIGHTS):
        w = model.params[f"conv{h}_w"]
        length = SEQUENCE_LENGTH - h + 1
        dpool = dpooled[:, bank * N_FILTERS : (bank + 1) * N_FILTERS]
        dact = np.zeros((n, length, N_FILTERS))
        dact[rows, state.pool_argmax[h], cols] = dpool
        dpre = dact * model._activate_grad(state.conv_pre[h][:, :, 0, :])
        grads[f"conv{h}_b"] = dpre.sum(axis=(0, 1))
        dw = np.zeros_like(w)
        for d in range(h):
            dw[d] = np.tensordot(state.embed[:, d : d + length, :], dpre, axes=([0, 1], [0, 1]))
            dembed[:, d : d + length, :] += dpre @ w[d].T
        grads[f"conv{h}_w"] = dw

    if state.ids is not None:
        dembedding = np.zeros_like(model.params["embedding"])
        np.add.at(dembedding, state.ids, dembed)
        grads["embedding"] = dembedding
    return grads, dembed


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its logit gradient."""
    probs = softmax(logits)
    n = logits.shape[0]
    loss = float(-np.log(np.clip(probs[np.arange(n), labels], 1e-300, None)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def cnn_loss_and_grads(
    model: CnnModel,
    ids: np.ndarray,
    labels: np.ndarray,
    dropout_mask: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Single training-objective evaluation; used by the trainer and by
    gradient-check tests (pass a fixed mask for a deterministic objective)."""
    state = cnn_forward(model, ids=ids, train_mode=dropout_mask is not None, dropout_mask=dropout_mask)
    loss, dlogits = cross_entropy(state.logits, labels)
    grads, _ = cnn_backward(model, state, dlogits)
    return loss, grads


def train_cnn(
    sequences: np.ndarray,
    labels: np.ndarray,
    vocab_size: int,
    config: CnnTrainConfig | None = None,
) -> CnnModel:
    """Mini-batch Adam on softmax cross-entropy; deterministic given the seed."""
    config = config or CnnTrainConfig()
    sequences = np.asarray(sequences)
    labels = np.asarray(labels, dtype=np.int64)
    if sequences.shape[0] == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(config.seed)
    model = CnnModel(
        vocab_size,
        n_classes=len(ClassLabel),
        conv_activation="relu",
        dropout_rate=config.dropout_rate,
        seed=config.seed,
        rng=rng,
    )
    optimizer = Adam(model.params, config.learning_rate, config.beta1, config.beta2)
    n = sequences.shape[0]
    keep = 1.0 - config.dropout_rate
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            mask = (rng.random((batch.size, POOLED_WIDTH)) < keep) / keep
            loss, grads = cnn_loss_and_grads(model, sequences[batch], labels[batch], mask)
            if not np.isfinite(loss):
                raise DivergenceError("cnn", epoch)
            optimizer.step(grads)
    return model


def predict_cnn(model: CnnModel, sequences: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode argmax labels and softmax probabilities."""
    state = cnn_forward(model, ids=np.asarray(sequences), train_mode=False)
    probs = softmax(state.logits)
    return probs.argmax(axis=1), probs
