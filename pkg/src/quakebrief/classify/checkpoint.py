"""Model checkpoints: JSON manifest plus one little-endian float64 blob per tensor."""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..corpus import Vocabulary
from .cnn import CnnModel, CnnTrainConfig
from .gan import GanModel, GanTrainConfig, Generator
from .linear import LinearModel, LinearTrainConfig

MANIFEST_NAME = "manifest.json"


def _vocab_to_json(vocab: Vocabulary) -> dict:
    tokens = [t for t, _ in sorted(vocab.token_to_id.items(), key=lambda kv: kv[1])]
    return {
        "tokens": tokens,
        "doc_freq": [vocab.doc_freq.get(t, 0) for t in tokens],
        "n_docs": vocab.n_docs,
    }


def _vocab_from_json(obj: dict) -> Vocabulary:
    tokens = obj["tokens"]
    return Vocabulary(
        token_to_id={t: i + 2 for i, t in enumerate(tokens)},
        doc_freq=dict(zip(tokens, obj["doc_freq"])),
        n_docs=obj["n_docs"],
    )


def _write_tensors(out_dir: Path, tensors: dict[str, np.ndarray]) -> list[dict]:
    entries = []
    for name, array in tensors.items():
        file_name = name.replace("/", "__") + ".bin"
        (out_dir / file_name).write_bytes(np.ascontiguousarray(array, dtype="<f8").tobytes())
        entries.append({"name": name, "shape": list(array.shape), "file": file_name})
    return entries


def _read_tensors(ckpt_dir: Path, entries: list[dict]) -> dict[str, np.ndarray]:
    tensors = {}
    for entry in entries:
        raw = (ckpt_dir / entry["file"]).read_bytes()
        arr = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])
        tensors[entry["name"]] = arr.copy()
    return tensors


def save_model(
    ckpt_dir: str | Path,
    model: LinearModel | CnnModel | GanModel,
    vocab: Vocabulary,
    feature_scheme: str = "tfidf",
) -> Path:
    """Write a self-contained checkpoint directory for any model kind."""
    out = Path(ckpt_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"vocabulary": _vocab_to_json(vocab)}

    if isinstance(model, LinearModel):
        manifest["model"] = model.kind
        manifest["feature_scheme"] = feature_scheme
        manifest["config"] = asdict(model.config)
        tensors = {"weights": model.weights, "bias": model.bias}
    elif isinstance(model, CnnModel):
        manifest["model"] = "cnn"
        manifest["architecture"] = {
            "vocab_size": model.vocab_size,
            "n_classes": model.n_classes,
            "conv_activation": model.conv_activation,
            "dropout_rate": model.dropout_rate,
            "seed": model.seed,
        }
        tensors = dict(model.params)
    elif isinstance(model, GanModel):
        disc, gen = model.discriminator, model.generator
        manifest["model"] = "gan"
        manifest["architecture"] = {
            "vocab_size": disc.vocab_size,
            "n_classes": disc.n_classes,
            "conv_activation": disc.conv_activation,
            "dropout_rate": disc.dropout_rate,
            "latent_dim": gen.latent_dim,
        }
        manifest["config"] = asdict(model.config)
        tensors = {f"discriminator/{k}": v for k, v in disc.params.items()}
        tensors.update({f"generator/{k}": v for k, v in gen.params.items()})
        tensors.update({f"generator/running/{k}": v for k, v in gen.running.items()})
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")

    manifest["tensors"] = _write_tensors(out, tensors)
    (out / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


def load_model(ckpt_dir: str | Path):
    """Load a checkpoint; returns (kind, model, vocabulary, feature_scheme)."""
    ckpt = Path(ckpt_dir)
    manifest = json.loads((ckpt / MANIFEST_NAME).read_text(encoding="utf-8"))
    vocab = _vocab_from_json(manifest["vocabulary"])
    tensors = _read_tensors(ckpt, manifest["tensors"])
    kind = manifest["model"]

    if kind in ("logistic", "svm"):
        config = LinearTrainConfig(**manifest.get("config", {}))
        model = LinearModel(kind, tensors["weights"], tensors["bias"], config)
        return kind, model, vocab, manifest.get("feature_scheme", "tfidf")
    if kind == "cnn":
        arch = manifest["architecture"]
        model = CnnModel(
            arch["vocab_size"],
            n_classes=arch["n_classes"],
            conv_activation=arch["conv_activation"],
            dropout_rate=arch["dropout_rate"],
            seed=arch.get("seed", 0),
        )
        model.params.update(tensors)
        return kind, model, vocab, None
    if kind == "gan":
        arch = manifest["architecture"]
        disc = CnnModel(
            arch["vocab_size"],
            n_classes=arch["n_classes"],
            conv_activation=arch["conv_activation"],
            dropout_rate=arch["dropout_rate"],
        )
        gen = Generator(arch["latent_dim"])
        for name, arr in tensors.items():
            if name.startswith("discriminator/"):
                disc.params[name.split("/", 1)[1]] = arr
            elif name.startswith("generator/running/"):
                gen.running[name.rsplit("/", 1)[1]] = arr
            elif name.startswith("generator/"):
                gen.params[name.split("/", 1)[1]] = arr
        config = GanTrainConfig(**manifest.get("config", {}))
        model = GanModel(disc, gen, config)
        return kind, model, vocab, None
    raise ValueError(f"unknown checkpoint model kind {kind!r}")
