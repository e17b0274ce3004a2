"""Cross-module orchestration shared by the CLI subcommands."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classify as clf
from .config import PipelineConfig
from .corpus import (
    ClassLabel,
    LabeledSentence,
    Sentence,
    Vocabulary,
    build_vocabulary,
    encode_sequence,
    load_labeled_dataset,
    segment_sentences,
    tokenize,
    vectorize,
)
from .ingest import load_documents

logger = logging.getLogger(__name__)


@dataclass
class TrainingData:
    dataset: list[LabeledSentence]
    vocab: Vocabulary
    sequences: np.ndarray  # (n, 64) token ids
    labels: np.ndarray  # (n,)
    features: list[dict[int, float]]


def prepare_training_data(csv_path: str | Path, scheme: str = "tfidf") -> TrainingData:
    dataset = load_labeled_dataset(csv_path)
    token_lists = [tokenize(item.sentence.text) for item in dataset]
    vocab = build_vocabulary(token_lists, min_count=1)
    sequences = np.stack([encode_sequence(tokens, vocab) for tokens in token_lists])
    labels = np.array([int(item.label) for item in dataset], dtype=np.int64)
    features = [vectorize(tokens, vocab, scheme) for tokens in token_lists]
    return TrainingData(dataset, vocab, sequences, labels, features)


def train_model(
    kind: str,
    data_csv: str | Path,
    params: dict,
    scheme: str = "tfidf",
    unlabeled_file: str | Path | None = None,
):
    """Train one classifier kind; returns (model, vocab, training accuracy)."""
    data = prepare_training_data(data_csv, scheme)
    if kind in ("lr", "svm"):
        config = clf.LinearTrainConfig(**params)
        model_kind = "logistic" if kind == "lr" else "svm"
        model = clf.train_linear(data.features, [ClassLabel(l) for l in data.labels],
                                 data.vocab.size, model_kind, config)
        preds = [int(clf.predict_linear(model, fv)[0]) for fv in data.features]
    elif kind == "cnn":
        config = clf.CnnTrainConfig(**params)
        model = clf.train_cnn(data.sequences, data.labels, data.vocab.size, config)
        preds = clf.predict_cnn(model, data.sequences)[0].tolist()
    elif kind == "gan":
        config = clf.GanTrainConfig(**params)
        unlabeled = None
        if unlabeled_file is not None:
            lines = [l.strip() for l in Path(unlabeled_file).read_text(encoding="utf-8").splitlines()]
            rows = [encode_sequence(tokenize(l), data.vocab) for l in lines if l]
            unlabeled = np.stack(rows) if rows else None
        # the GAN trains on the three real classes; `other` rows join the
        # unlabeled pool
        real = data.labels < clf.K_REAL
        other_rows = data.sequences[~real]
        if other_rows.size:
            unlabeled = other_rows if unlabeled is None else np.concatenate([unlabeled, other_rows])
        model = clf.train_gan(data.sequences[real], data.labels[real], unlabeled,
                              data.vocab.size, config)
        # training accuracy is measured on the labeled (real-class) rows
        preds = clf.predict_gan(model, data.sequences[real])[0]
        return model, data.vocab, float(np.mean(preds == data.labels[real]))
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    train_acc = float(np.mean(np.asarray(preds) == data.labels))
    return model, data.vocab, train_acc


@dataclass
class EnsembleModels:
    lr: clf.LinearModel
    svm: clf.LinearModel
    cnn: clf.CnnModel
    gan: clf.GanModel
    vocab: Vocabulary
    scheme: str


def load_ensemble(config: PipelineConfig) -> EnsembleModels:
    """Load the four trained classifiers from their checkpoints."""
    loaded = {}
    vocab = None
    scheme = config.feature_scheme
    for name in ("lr", "svm", "cnn", "gan"):
        ckpt = config.checkpoint_for(name)
        if not (Path(ckpt) / "manifest.json").exists():
            raise FileNotFoundError(
                f"no checkpoint for {name!r} at {ckpt}; run `quakebrief train --model {name}` first"
            )
        kind, model, ckpt_vocab, ckpt_scheme = clf.load_model(ckpt)
        loaded[name] = model
        vocab = ckpt_vocab
        if ckpt_scheme:
            scheme = ckpt_scheme
    return EnsembleModels(loaded["lr"], loaded["svm"], loaded["cnn"], loaded["gan"], vocab, scheme)


def classify_sentences(
    sentences: list[Sentence], models: EnsembleModels
) -> list[tuple[Sentence, ClassLabel, dict[str, ClassLabel]]]:
    """Ensemble-vote labels for each sentence, with per-method votes."""
    out = []
    if not sentences:
        return out
    token_lists = [tokenize(s.text) for s in sentences]
    sequences = np.stack([encode_sequence(t, models.vocab) for t in token_lists])
    cnn_preds = clf.predict_cnn(models.cnn, sequences)[0]
    gan_preds = clf.predict_gan(models.gan, sequences)[0]
    for i, sentence in enumerate(sentences):
        features = vectorize(token_lists[i], models.vocab, models.scheme)
        votes = {
            "lr": clf.predict_linear(models.lr, features)[0],
            "svm": clf.predict_linear(models.svm, features)[0],
            "cnn": ClassLabel(int(cnn_preds[i])),
            "gan": ClassLabel(int(gan_preds[i])),
        }
        out.append((sentence, clf.ensemble_vote(votes), votes))
    return out


def event_sentences(store_dir: str | Path, event_id: str) -> list[Sentence]:
    """Segment every stored document of an event into sentences."""
    sentences = []
    for doc in load_documents(store_dir, event_id):
        sentences.extend(segment_sentences(doc.body, document_id=doc.id))
    return sentences
