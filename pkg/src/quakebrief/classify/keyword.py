"""Keyword-match baseline classifier."""
from __future__ import annotations

import json
from pathlib import Path

from ..corpus import ClassLabel, Sentence, tokenize

# Tie priority for equal match counts.
_CONTENT_PRIORITY = (ClassLabel.building, ClassLabel.infrastructure, ClassLabel.resilience)


def load_keyword_lists(path: str | Path) -> dict[ClassLabel, set[str]]:
    """Load a JSON mapping of class name to lowercase keyword arrays."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    lists = {}
    for name, keywords in raw.items():
        lists[ClassLabel[name]] = {k.lower() for k in keywords}
    return lists


def keyword_classify(sentence: Sentence, keyword_lists: dict[ClassLabel, set[str]]) -> ClassLabel:
    """Return the class whose keyword list matches the most tokens.

    Zero matches map to ``other``; ties resolve building > infrastructure >
    resilience.
    """
    if not any(keyword_lists.get(label) for label in _CONTENT_PRIORITY):
        raise ValueError("keyword lists are empty for every content class")
    tokens = tokenize(sentence.text)
    best = ClassLabel.other
    best_count = 0
    for label in _CONTENT_PRIORITY:
        keywords = keyword_lists.get(label, set())
        count = sum(1 for t in tokens if t in keywords)
        if count > best_count:
            best, best_count = label, count
    return best
