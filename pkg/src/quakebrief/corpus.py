"""Sentence segmentation, tokenization, vocabulary and featurization."""
from __future__ import annotations

import csv
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

SEQUENCE_LENGTH = 64
EMBEDDING_DIM = 80
PAD_ID = 0
UNK_ID = 1

# Abbreviations whose trailing period never ends a sentence. Compared after
# lowercasing and stripping internal/trailing periods ("U.S." -> "u.s").
ABBREVIATIONS = {
    "mw", "u.s", "u.k", "a.m", "p.m", "approx", "e.g", "i.e", "etc",
    "dr", "mr", "mrs", "ms", "prof", "st", "no", "fig", "vs", "al",
}

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


class ClassLabel(IntEnum):
    """The four briefing sentence categories."""

    building = 0
    infrastructure = 1
    resilience = 2
    other = 3


#: Number of content classes the GAN discriminator treats as "real";
#: the fake class takes index K_REAL.
K_REAL = 3
FAKE_CLASS = K_REAL

LABEL_NAMES = tuple(label.name for label in ClassLabel)


@dataclass(frozen=True)
class Sentence:
    document_id: str
    index: int
    text: str


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    label: ClassLabel


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric (ASCII) characters."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _is_abbreviation(text: str, period_index: int) -> bool:
    # Walk back over the token (letters, digits, internal periods) that the
    # period terminates.
    start = period_index
    while start > 0 and (text[start - 1].isalnum() or text[start - 1] == "."):
        start -= 1
    token = text[start:period_index].lower().rstrip(".")
    return token in ABBREVIATIONS


def segment_sentences(body: str, document_id: str = "") -> list[Sentence]:
    """Split text into sentences.

    A sentence ends at ``.``, ``!`` or ``?`` followed by whitespace and an
    uppercase letter (or end of text), unless the period terminates a known
    abbreviation. Blank lines are hard boundaries. Segments with fewer than
    two tokens are dropped. Each returned text is a contiguous substring of
    the input.
    """
    boundaries = []  # end offsets (exclusive) of raw segments
    n = len(body)
    i = 0
    while i < n:
        ch = body[i]
        if ch in ".!?":
            j = i + 1
            while j < n and body[j] in ".!?":
                j += 1
            k = j
            while k < n and body[k].isspace():
                k += 1
            at_end = k >= n
            next_upper = not at_end and body[k].isupper()
            if (at_end or (k > j and next_upper)) and not (
                ch == "." and _is_abbreviation(body, i)
            ):
                boundaries.append(j)
            i = j
            continue
        if ch == "\n":
            j = i + 1
            while j < n and body[j] in " \t\r":
                j += 1
            if j < n and body[j] == "\n":
                boundaries.append(i)  # paragraph break
        i += 1
    boundaries.append(n)

    sentences = []
    start = 0
    for end in boundaries:
        raw = body[start:end].strip()
        start = end
        if raw and len(tokenize(raw)) >= 2:
            sentences.append(Sentence(document_id, len(sentences), raw))
    return sentences


@dataclass
class Vocabulary:
    """Token ids with reserved PAD=0 and UNK=1; frozen after construction."""

    token_to_id: dict[str, int]
    doc_freq: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0

    @property
    def size(self) -> int:
        return len(self.token_to_id) + 2

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


def build_vocabulary(token_lists: list[list[str]], min_count: int = 1) -> Vocabulary:
    """Assign ids 2.. by descending frequency, ties broken lexicographically."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts = Counter()
    doc_freq = Counter()
    for tokens in token_lists:
        counts.update(tokens)
        doc_freq.update(set(tokens))
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    token_to_id = {t: i + 2 for i, t in enumerate(kept)}
    return Vocabulary(token_to_id, dict(doc_freq), len(token_lists))


def encode_sequence(tokens: list[str], vocab: Vocabulary) -> np.ndarray:
    """Map tokens to ids, right-padded/truncated to SEQUENCE_LENGTH."""
    ids = np.full(SEQUENCE_LENGTH, PAD_ID, dtype=np.int64)
    for i, token in enumerate(tokens[:SEQUENCE_LENGTH]):
        ids[i] = vocab.id_for(token)
    return ids


def vectorize(tokens: list[str], vocab: Vocabulary, scheme: str = "count") -> dict[int, float]:
    """Sparse bag-of-words features: raw counts or smoothed, L2-normalized TF-IDF."""
    if scheme not in ("count", "tfidf"):
        raise ValueError(f"unknown scheme {scheme!r}")
    counts = Counter(vocab.id_for(t) for t in tokens)
    if scheme == "count":
        return {i: float(c) for i, c in counts.items()}
    id_to_token = {i: t for t, i in vocab.token_to_id.items()}
    weights = {}
    for token_id, count in counts.items():
        df = vocab.doc_freq.get(id_to_token.get(token_id, ""), 0)
        idf = math.log((1 + vocab.n_docs) / (1 + df)) + 1.0
        weights[token_id] = count * idf
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm > 0:
        weights = {i: w / norm for i, w in weights.items()}
    return weights


def load_labeled_dataset(path: str | Path) -> list[LabeledSentence]:
    """Read a ``text,label`` CSV into labeled sentences.

    Unknown labels raise with the offending row number; rows with empty text
    are rejected with a warning.
    """
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["text", "label"]:
            raise ValueError(f"{path}: expected header 'text,label', got {reader.fieldnames}")
        for row_num, row in enumerate(reader, start=2):
            text = (row.get("text") or "").strip()
            label_name = (row.get("label") or "").strip()
            if label_name not in LABEL_NAMES:
                raise ValueError(f"{path}: row {row_num}: unknown label {label_name!r}")
            if not text:
                logger.warning("%s: row %d: empty text, row rejected", path, row_num)
                continue
            sentence = Sentence(document_id=str(path.name), index=len(out), text=text)
            out.append(LabeledSentence(sentence, ClassLabel[label_name]))
    return out
