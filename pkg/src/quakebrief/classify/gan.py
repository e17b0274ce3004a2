"""Semi-supervised GAN: CNN discriminator with a fake class, deconv generator.

The discriminator reuses the CNN classifier body with leaky-ReLU conv
activations and K_REAL+1 output logits. The generator maps a latent
Gaussian vector through a fully-connected layer and three stride-2/2/1
transposed convolutions to a 64x80 embedding matrix that feeds the
discriminator's conv banks directly, bypassing the embedding lookup.

Loss terms:
  d_total = d_unsupervised + d_supervised
  d_unsupervised = -E_real log(1 - p(fake|x)) - E_gen log p(fake|x)
  d_supervised   = -E_real -labeled log p(y|x, y < fake)
  g_total = g_game + g_feature_matching
  g_game  = -E_z log(1 - p(fake|G(z)))
  g_feature_matching = || E_real f(x) - E_z f(G(z)) ||^2
with expectations taken as mini-batch means and f the ReLU feature map of
the pooled conv outputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import ClassLabel, EMBEDDING_DIM, FAKE_CLASS, K_REAL, SEQUENCE_LENGTH
from .cnn import Adam, CnnModel, cnn_backward, cnn_forward
from .linear import DivergenceError, softmax

LATENT_DIM = 100
FC_UNITS = 16 * 20 * 128  # 40,960
BN_MOMENTUM = 0.8
BN_EPS = 1e-5

# Count of log() arguments clamped at 1e-12; tests assert this stays rare.
CLAMP_STATS = {"count": 0}


def _safe_log(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    clipped = x <= 1e-12
    if np.any(clipped):
        CLAMP_STATS["count"] += int(np.count_nonzero(clipped))
    return np.log(np.clip(x, 1e-12, None))


@dataclass
class LossBreakdown:
    d_total: float = 0.0
    d_unsupervised: float = 0.0
    d_supervised: float = 0.0
    g_total: float = 0.0
    g_game: float = 0.0
    g_feature_matching: float = 0.0


def discriminator_loss(
    p_real: np.ndarray, labels: np.ndarray, p_fake: np.ndarray
) -> LossBreakdown:
    """Discriminator loss parts from probability vectors over K_REAL+1.

    `labels` aligns with `p_real`; entries of -1 mark unlabeled rows, which
    contribute to the unsupervised term only.
    """
    p_real = np.atleast_2d(np.asarray(p_real, dtype=np.float64))
    p_fake = np.atleast_2d(np.asarray(p_fake, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    if np.any(labels >= K_REAL):
        raise ValueError("labels must be < K_REAL (or -1 for unlabeled)")
    d_unsup = float(
        -_safe_log(1.0 - p_real[:, FAKE_CLASS]).mean() - _safe_log(p_fake[:, FAKE_CLASS]).mean()
    )
    labeled = labels >= 0
    if not np.any(labeled):
        d_sup = 0.0
    else:
        rows = p_real[labeled]
        conditional = rows[:, :K_REAL] / np.clip(1.0 - rows[:, FAKE_CLASS], 1e-12, None)[:, None]
        d_sup = float(-_safe_log(conditional[np.arange(rows.shape[0]), labels[labeled]]).mean())
    return LossBreakdown(
        d_total=d_unsup + d_sup, d_unsupervised=d_unsup, d_supervised=d_sup
    )


def generator_loss(p_fake: np.ndarray, f_real: np.ndarray, f_fake: np.ndarray) -> LossBreakdown:
    """Generator game + feature-matching loss from probabilities and feature maps."""
    p_fake = np.atleast_2d(np.asarray(p_fake, dtype=np.float64))
    f_real = np.atleast_2d(np.asarray(f_real, dtype=np.float64))
    f_fake = np.atleast_2d(np.asarray(f_fake, dtype=np.float64))
    g_game = float(-_safe_log(1.0 - p_fake[:, FAKE_CLASS]).mean())
    diff = f_real.mean(axis=0) - f_fake.mean(axis=0)
    g_fm = float(diff @ diff)
    return LossBreakdown(g_total=g_game + g_fm, g_game=g_game, g_feature_matching=g_fm)


def _deconv_slices(h_in: int, h_out: int, stride: int, pad: int, dy: int):
    i0 = max(0, -(-(pad - dy) // stride))
    i1 = min(h_in, -(-(h_out - dy + pad) // stride))
    r0 = stride * i0 + dy - pad
    return slice(i0, i1), slice(r0, r0 + stride * (i1 - i0), stride)


def deconv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    """Transposed 3x3 convolution with 'same' semantics: output = input * stride."""
    n, h, width, _ = x.shape
    h_out, w_out = h * stride, width * stride
    pad = 0 if stride == 2 else 1
    out = np.zeros((n, h_out, w_out, w.shape[3]))
    for dy in range(3):
        in_r, out_r = _deconv_slices(h, h_out, stride, pad, dy)
        for dx in range(3):
            in_c, out_c = _deconv_slices(width, w_out, stride, pad, dx)
            out[:, out_r, out_c, :] += x[:, in_r, in_c, :] @ w[dy, dx]
    return out + b


def deconv_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray, stride: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n, h, width, _ = x.shape
    h_out, w_out = h * stride, width * stride
    pad = 0 if stride == 2 else 1
    dx_ = np.zeros_like(x)
    dw = np.zeros_like(w)
    for dy in range(3):
        in_r, out_r = _deconv_slices(h, h_out, stride, pad, dy)
        for dxo in range(3):
            in_c, out_c = _deconv_slices(width, w_out, stride, pad, dxo)
            patch_in = x[:, in_r, in_c, :]
            patch_out = dout[:, out_r, out_c, :]
            dw[dy, dxo] = np.tensordot(patch_in, patch_out, axes=([0, 1, 2], [0, 1, 2]))
            dx_[:, in_r, in_c, :] += patch_out @ w[dy, dxo].T
    return dx_, dw, dout.sum(axis=(0, 1, 2))


class Generator:
    """Latent vector -> FC 40,960 -> 16x20x128 -> deconvs to a 64x80 matrix."""

    def __init__(self, latent_dim: int = LATENT_DIM, seed: int = 0, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(seed)
        self.latent_dim = latent_dim

        def he(shape, fan_in):
            return rng.normal(0.0, np.sqrt(2.0 / fan_in), shape)

        self.params: dict[str, np.ndarray] = {
            "fc_w": he((latent_dim, FC_UNITS), latent_dim),
            "fc_b": np.zeros(FC_UNITS),
            "deconv1_w": he((3, 3, 128, 64), 9 * 128),
            "deconv1_b": np.zeros(64),
            "bn1_gamma": np.ones(64),
            "bn1_beta": np.zeros(64),
            "deconv2_w": he((3, 3, 64, 3), 9 * 64),
            "deconv2_b": np.zeros(3),
            "bn2_gamma": np.ones(3),
            "bn2_beta": np.zeros(3),
            "deconv3_w": he((3, 3, 3, 1), 9 * 3),
            "deconv3_b": np.zeros(1),
        }
        self.running: dict[str, np.ndarray] = {
            "bn1_mean": np.zeros(64),
            "bn1_var": np.ones(64),
            "bn2_mean": np.zeros(3),
            "bn2_var": np.ones(3),
        }

    def _batchnorm(self, name: str, x: np.ndarray, train_mode: bool, update_running: bool, cache: dict):
        gamma = self.params[f"{name}_gamma"]
        beta = self.params[f"{name}_beta"]
        if train_mode:
            mean = x.mean(axis=(0, 1, 2))
            var = x.var(axis=(0, 1, 2))
            if update_running:
                self.running[f"{name}_mean"] = BN_MOMENTUM * self.running[f"{name}_mean"] + (1 - BN_MOMENTUM) * mean
                self.running[f"{name}_var"] = BN_MOMENTUM * self.running[f"{name}_var"] + (1 - BN_MOMENTUM) * var
        else:
            mean = self.running[f"{name}_mean"]
            var = self.running[f"{name}_var"]
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mean) * inv_std
        cache[name] = (x, xhat, mean, inv_std, train_mode)
        return gamma * xhat + beta

    def _batchnorm_backward(self, name: str, dy: np.ndarray, cache: dict, grads: dict):
        x, xhat, mean, inv_std, train_mode = cache[name]
        gamma = self.params[f"{name}_gamma"]
        grads[f"{name}_gamma"] = (dy * xhat).sum(axis=(0, 1, 2))
        grads[f"{name}_beta"] = dy.sum(axis=(0, 1, 2))
        dxhat = dy * gamma
        if not train_mode:
            return dxhat * inv_std
        m = x.shape[0] * x.shape[1] * x.shape[2]
        dvar = (dxhat * (x - mean)).sum(axis=(0, 1, 2)) * (-0.5) * inv_std**3
        dmean = -(dxhat.sum(axis=(0, 1, 2))) * inv_std + dvar * (-2.0 / m) * (x - mean).sum(axis=(0, 1, 2))
        return dxhat * inv_std + dvar * 2.0 * (x - mean) / m + dmean / m

    def forward(self, z: np.ndarray, train_mode: bool = True, update_running: bool = False) -> dict:
        """Produce fake embeddings (N, 64, 80); returns a cache for backward."""
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        p = self.params
        cache: dict = {"z": z, "shapes": {"input": z.shape}}
        fc_pre = z @ p["fc_w"] + p["fc_b"]
        fc_act = np.maximum(fc_pre, 0.0)
        cache["fc_pre"] = fc_pre
        cache["shapes"]["fc"] = fc_act.shape
        x1 = fc_act.reshape(-1, 16, 20, 128)
        cache["x1"] = x1
        cache["shapes"]["reshape"] = x1.shape

        d1_pre = deconv_forward(x1, p["deconv1_w"], p["deconv1_b"], stride=2)
        d1_act = np.maximum(d1_pre, 0.0)
        cache["d1_pre"] = d1_pre
        cache["d1_act"] = d1_act
        cache["shapes"]["deconv1"] = d1_act.shape
        bn1 = self._batchnorm("bn1", d1_act, train_mode, update_running, cache)
        cache["bn1_out"] = bn1
        cache["shapes"]["batchnorm1"] = bn1.shape

        d2_pre = deconv_forward(bn1, p["deconv2_w"], p["deconv2_b"], stride=2)
        d2_act = np.maximum(d2_pre, 0.0)
        cache["d2_pre"] = d2_pre
        cache["d2_act"] = d2_act
        cache["shapes"]["deconv2"] = d2_act.shape
        bn2 = self._batchnorm("bn2", d2_act, train_mode, update_running, cache)
        cache["bn2_out"] = bn2
        cache["shapes"]["batchnorm2"] = bn2.shape

        d3 = deconv_forward(bn2, p["deconv3_w"], p["deconv3_b"], stride=1)
        cache["shapes"]["deconv3"] = d3.shape
        out = d3[:, :, :, 0]
        cache["out"] = out
        cache["shapes"]["output"] = out.shape
        return cache

    def backward(self, cache: dict, dout: np.ndarray) -> dict[str, np.ndarray]:
        p = self.params
        grads: dict[str, np.ndarray] = {}
        dd3 = dout[:, :, :, None]
        dbn2, grads["deconv3_w"], grads["deconv3_b"] = deconv_backward(
            cache["bn2_out"], p["deconv3_w"], dd3, stride=1
        )
        dd2_act = self._batchnorm_backward("bn2", dbn2, cache, grads)
        dd2_pre = dd2_act * (cache["d2_pre"] > 0)
        dbn1, grads["deconv2_w"], grads["deconv2_b"] = deconv_backward(
            cache["bn1_out"], p["deconv2_w"], dd2_pre, stride=2
        )
        dd1_act = self._batchnorm_backward("bn1", dbn1, cache, grads)
        dd1_pre = dd1_act * (cache["d1_pre"] > 0)
        dx1, grads["deconv1_w"], grads["deconv1_b"] = deconv_backward(
            cache["x1"], p["deconv1_w"], dd1_pre, stride=2
        )
        dfc_act = dx1.reshape(dx1.shape[0], FC_UNITS)
        dfc_pre = dfc_act * (cache["fc_pre"] > 0)
        grads["fc_w"] = cache["z"].T @ dfc_pre
        grads["fc_b"] = dfc_pre.sum(axis=0)
        return grads


@dataclass
class GanTrainConfig:
    learning_rate: float = 1e-3
    iterations: int = 500
    batch_size: int = 16
    latent_dim: int = LATENT_DIM
    dropout_rate: float = 0.25
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999


@dataclass
class GanModel:
    discriminator: CnnModel
    generator: Generator
    config: GanTrainConfig = field(default_factory=GanTrainConfig)
    history: list[LossBreakdown] = field(default_factory=list)


def _real_renormalized(probs: np.ndarray) -> np.ndarray:
    # Distribution over all K+1 slots proportional to the real-class mass.
    out = np.zeros_like(probs)
    mass = np.clip(1.0 - probs[:, FAKE_CLASS], 1e-12, None)
    out[:, :K_REAL] = probs[:, :K_REAL] / mass[:, None]
    return out


def discriminator_step_grads(
    disc: CnnModel,
    real_ids: np.ndarray,
    labels: np.ndarray,
    fake_embed: np.ndarray,
    mask_real: np.ndarray | None,
    mask_fake: np.ndarray | None,
) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    """Loss parts and analytic discriminator gradients for one batch triple.

    `labels` uses -1 for unlabeled real rows. Fixed dropout masks make the
    objective deterministic (used both in training and gradient checks).
    """
    train = mask_real is not None
    state_real = cnn_forward(disc, ids=real_ids, train_mode=train, dropout_mask=mask_real)
    state_fake = cnn_forward(disc, embed=fake_embed, train_mode=train, dropout_mask=mask_fake)
    p_real = softmax(state_real.logits)
    p_fake = softmax(state_fake.logits)
    losses = discriminator_loss(p_real, labels, p_fake)

    n_real = p_real.shape[0]
    n_fake = p_fake.shape[0]
    # -log(1 - p_fake_class) on real rows: d/dlogits = (p - renormalized_real)/N
    dlogits_real = (p_real - _real_renormalized(p_real)) / n_real
    labeled = labels >= 0
    n_labeled = int(np.count_nonzero(labeled))
    if n_labeled:
        # supervised: -(l_y - logsumexp over real logits)
        sup = _real_renormalized(p_real[labeled])
        sup[np.arange(n_labeled), labels[labeled]] -= 1.0
        dlogits_real[labeled] += sup / n_labeled
    # -log p_fake_class on generated rows
    dlogits_fake = p_fake.copy()
    dlogits_fake[:, FAKE_CLASS] -= 1.0
    dlogits_fake /= n_fake

    grads_real, _ = cnn_backward(disc, state_real, dlogits_real)
    grads_fake, _ = cnn_backward(disc, state_fake, dlogits_fake)
    grads = {k: grads_real.get(k, 0.0) + grads_fake.get(k, 0.0) for k in disc.params}
    return losses, grads


def discriminator_step_loss(
    disc: CnnModel,
    real_ids: np.ndarray,
    labels: np.ndarray,
    fake_embed: np.ndarray,
    mask_real: np.ndarray | None,
    mask_fake: np.ndarray | None,
) -> LossBreakdown:
    """Value-only evaluation of the discriminator objective (for FD probes)."""
    train = mask_real is not None
    state_real = cnn_forward(disc, ids=real_ids, train_mode=train, dropout_mask=mask_real)
    state_fake = cnn_forward(disc, embed=fake_embed, train_mode=train, dropout_mask=mask_fake)
    return discriminator_loss(softmax(state_real.logits), labels, softmax(state_fake.logits))


def generator_step_grads(
    disc: CnnModel,
    gen: Generator,
    z: np.ndarray,
    f_real: np.ndarray,
    mask_fake: np.ndarray | None,
    gen_cache: dict | None = None,
    update_running: bool = False,
) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    """Loss parts and analytic generator gradients for one latent batch."""
    if gen_cache is None:
        gen_cache = gen.forward(z, train_mode=True, update_running=update_running)
    fake_embed = gen_cache["out"]
    train = mask_fake is not None
    state = cnn_forward(disc, embed=fake_embed, train_mode=train, dropout_mask=mask_fake)
    p_fake = softmax(state.logits)
    losses = generator_loss(p_fake, f_real, state.feature_map)

    n = p_fake.shape[0]
    dlogits = (p_fake - _real_renormalized(p_fake)) / n
    diff = np.asarray(f_real).mean(axis=0) - state.feature_map.mean(axis=0)
    dfeature = np.tile(-2.0 * diff / n, (n, 1))
    _, dembed = cnn_backward(disc, state, dlogits, dfeature_map=dfeature)
    grads = gen.backward(gen_cache, dembed)
    return losses, grads


def generator_step_loss(
    disc: CnnModel,
    gen: Generator,
    z: np.ndarray,
    f_real: np.ndarray,
    mask_fake: np.ndarray | None,
) -> LossBreakdown:
    """Value-only evaluation of the generator objective (for FD probes)."""
    gen_cache = gen.forward(z, train_mode=True, update_running=False)
    train = mask_fake is not None
    state = cnn_forward(disc, embed=gen_cache["out"], train_mode=train, dropout_mask=mask_fake)
    return generator_loss(softmax(state.logits), f_real, state.feature_map)


def train_gan(
    labeled_sequences: np.ndarray,
    labels: np.ndarray,
    unlabeled_sequences: np.ndarray | None,
    vocab_size: int,
    config: GanTrainConfig | None = None,
) -> GanModel:
    """Alternate one discriminator and one generator Adam step per iteration.

    Each iteration samples a labeled batch, an unlabeled batch (when
    available) and one latent batch; the same generated embeddings feed both
    steps. Deterministic given the seed.
    """
    config = config or GanTrainConfig()
    labeled_sequences = np.asarray(labeled_sequences)
    labels_all = np.asarray(labels, dtype=np.int64)
    if labeled_sequences.shape[0] == 0:
        raise ValueError("labeled data must be non-empty")
    if np.any(labels_all >= K_REAL) or np.any(labels_all < 0):
        raise ValueError("GAN training labels must lie in the real classes")
    unlabeled = None
    if unlabeled_sequences is not None and len(unlabeled_sequences) > 0:
        unlabeled = np.asarray(unlabeled_sequences)

    rng = np.random.default_rng(config.seed)
    disc = CnnModel(
        vocab_size,
        n_classes=K_REAL + 1,
        conv_activation="leaky_relu",
        dropout_rate=config.dropout_rate,
        seed=config.seed,
        rng=rng,
    )
    gen = Generator(config.latent_dim, rng=rng)
    adam_d = Adam(disc.params, config.learning_rate, config.beta1, config.beta2)
    adam_g = Adam(gen.params, config.learning_rate, config.beta1, config.beta2)

    n_labeled = labeled_sequences.shape[0]
    batch = config.batch_size
    keep = 1.0 - config.dropout_rate
    history = []
    for iteration in range(config.iterations):
        idx = rng.integers(0, n_labeled, size=min(batch, n_labeled))
        real_ids = labeled_sequences[idx]
        real_labels = labels_all[idx]
        if unlabeled is not None:
            uidx = rng.integers(0, unlabeled.shape[0], size=min(batch, unlabeled.shape[0]))
            real_ids = np.concatenate([real_ids, unlabeled[uidx]])
            real_labels = np.concatenate([real_labels, np.full(uidx.size, -1, dtype=np.int64)])
        z = rng.standard_normal((batch, config.latent_dim))
        mask_real = (rng.random((real_ids.shape[0], 9)) < keep) / keep
        mask_fake = (rng.random((batch, 9)) < keep) / keep
        mask_fake_g = (rng.random((batch, 9)) < keep) / keep

        gen_cache = gen.forward(z, train_mode=True, update_running=True)
        d_losses, d_grads = discriminator_step_grads(
            disc, real_ids, real_labels, gen_cache["out"], mask_real, mask_fake
        )
        if not np.isfinite(d_losses.d_total):
            raise DivergenceError("gan discriminator", iteration)
        adam_d.step(d_grads)

        f_real = cnn_forward(disc, ids=real_ids, train_mode=False).feature_map
        g_losses, g_grads = generator_step_grads(
            disc, gen, z, f_real, mask_fake_g, gen_cache=gen_cache
        )
        if not np.isfinite(g_losses.g_total):
            raise DivergenceError("gan generator", iteration)
        adam_g.step(g_grads)

        history.append(
            LossBreakdown(
                d_total=d_losses.d_total,
                d_unsupervised=d_losses.d_unsupervised,
                d_supervised=d_losses.d_supervised,
                g_total=g_losses.g_total,
                g_game=g_losses.g_game,
                g_feature_matching=g_losses.g_feature_matching,
            )
        )
    return GanModel(disc, gen, config, history)


def predict_gan(gan: GanModel, sequences: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map sequences to the four labels: `other` when p(fake) > 0.5,
    otherwise the argmax of the renormalized real-class conditional."""
    state = cnn_forward(gan.discriminator, ids=np.asarray(sequences), train_mode=False)
    probs = softmax(state.logits)
    real_cond = probs[:, :K_REAL] / np.clip(1.0 - probs[:, FAKE_CLASS], 1e-12, None)[:, None]
    preds = real_cond.argmax(axis=1)
    preds = np.where(probs[:, FAKE_CLASS] > 0.5, int(ClassLabel.other), preds)
    return preds, probs
