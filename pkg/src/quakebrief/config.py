"""Pipeline configuration: one JSON file, flags override, paths resolve
relative to the config file's directory."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .ingest import CollectionWindow
from .recovery import RecoveryConfig, RecoveryFactor, default_recovery_config

ENV_CONFIG = "QB_CONFIG"


def bundled_data_dir() -> Path:
    return Path(resources.files("quakebrief") / "data")


@dataclass
class ClassifierBlock:
    checkpoint: str | None = None
    params: dict = field(default_factory=dict)


@dataclass
class PipelineConfig:
    store_dir: Path = Path("store")
    output_dir: Path = Path("out")
    feed_url: str | None = None
    feed_file: Path | None = None
    window: CollectionWindow = field(default_factory=CollectionWindow)
    keywords_file: Path | None = None
    training_data: Path | None = None
    feature_scheme: str = "tfidf"
    classifiers: dict[str, ClassifierBlock] = field(default_factory=dict)
    summarizer: dict = field(default_factory=lambda: {"ratio": 0.3, "min_sentences": 1, "max_sentences": 15})
    recovery: RecoveryConfig = field(default_factory=default_recovery_config)
    aspect_to_factor: dict[str, str] | None = None

    def __post_init__(self):
        data = bundled_data_dir()
        if self.keywords_file is None:
            self.keywords_file = data / "keywords.json"
        if self.training_data is None:
            self.training_data = data / "training_sentences.csv"
        for name in ("lr", "svm", "cnn", "gan"):
            self.classifiers.setdefault(name, ClassifierBlock())

    def checkpoint_for(self, model: str) -> Path:
        block = self.classifiers[model]
        if block.checkpoint:
            return Path(block.checkpoint)
        return self.output_dir / "checkpoints" / model


def _resolve(base: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load the JSON config; falls back to $QB_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return PipelineConfig()
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    window = CollectionWindow(**raw.get("window", {}))
    classifiers = {}
    for name, block in raw.get("classifiers", {}).items():
        block = dict(block)
        checkpoint = block.pop("checkpoint", None)
        checkpoint = str(_resolve(base, checkpoint)) if checkpoint else None
        classifiers[name] = ClassifierBlock(checkpoint=checkpoint, params=block)

    recovery_cfg = default_recovery_config()
    aspect_to_factor = None
    if "recovery" in raw:
        rec = raw["recovery"]
        factors = [
            RecoveryFactor(f["name"], frozenset(k.lower() for k in f["keywords"]), f["weight"])
            for f in rec.get("factors", [])
        ] or default_recovery_config().factors
        recovery_cfg = RecoveryConfig(
            factors=factors,
            threshold_fraction=rec.get("threshold_fraction", 0.15),
            steady_days=rec.get("steady_days", 3),
            bin_days=rec.get("bin_days", 1),
        )
        aspect_to_factor = rec.get("aspect_to_factor")

    config = PipelineConfig(
        store_dir=_resolve(base, raw.get("store_dir", "store")),
        output_dir=_resolve(base, raw.get("output_dir", "out")),
        feed_url=raw.get("feed_url"),
        feed_file=_resolve(base, raw.get("feed_file")),
        window=window,
        keywords_file=_resolve(base, raw.get("keywords_file")),
        training_data=_resolve(base, raw.get("training_data")),
        feature_scheme=raw.get("feature_scheme", "tfidf"),
        classifiers=classifiers,
        summarizer={**{"ratio": 0.3, "min_sentences": 1, "max_sentences": 15}, **raw.get("summarizer", {})},
        recovery=recovery_cfg,
        aspect_to_factor=aspect_to_factor,
    )
    for name, described in (("keywords_file", config.keywords_file),
                            ("training_data", config.training_data),
                            ("feed_file", config.feed_file)):
        if described is not None and name in raw and not Path(described).exists():
            raise FileNotFoundError(f"config {name} does not exist: {described}")
    return config
