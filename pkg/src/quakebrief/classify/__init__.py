"""Sentence classifiers: keyword match, LR, SVM, CNN, semi-supervised GAN, and the ensemble vote."""

from ..corpus import ClassLabel, FAKE_CLASS, K_REAL
from .keyword import keyword_classify, load_keyword_lists
from .linear import LinearModel, LinearTrainConfig, predict_linear, softmax, train_linear
from .cnn import CnnModel, CnnTrainConfig, cnn_forward, predict_cnn, train_cnn
from .gan import (
    GanModel,
    GanTrainConfig,
    Generator,
    LossBreakdown,
    discriminator_loss,
    generator_loss,
    predict_gan,
    train_gan,
)
from .ensemble import ensemble_vote
from .checkpoint import load_model, save_model

__all__ = [
    "ClassLabel",
    "FAKE_CLASS",
    "K_REAL",
    "keyword_classify",
    "load_keyword_lists",
    "LinearModel",
    "LinearTrainConfig",
    "predict_linear",
    "softmax",
    "train_linear",
    "CnnModel",
    "CnnTrainConfig",
    "cnn_forward",
    "predict_cnn",
    "train_cnn",
    "GanModel",
    "GanTrainConfig",
    "Generator",
    "LossBreakdown",
    "discriminator_loss",
    "generator_loss",
    "predict_gan",
    "train_gan",
    "ensemble_vote",
    "load_model",
    "save_model",
]
