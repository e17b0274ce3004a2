"""Majority vote over the four learned classifiers."""
from __future__ import annotations

from collections import Counter

from ..corpus import ClassLabel

REQUIRED_METHODS = ("lr", "svm", "cnn", "gan")


def ensemble_vote(predictions: dict[str, ClassLabel]) -> ClassLabel:
    """Plurality label; any tie resolves to the CNN's prediction."""
    missing = [m for m in REQUIRED_METHODS if m not in predictions]
    if missing:
        raise ValueError(f"missing ensemble predictions for: {', '.join(missing)}")
    counts = Counter(predictions[m] for m in REQUIRED_METHODS)
    top = counts.most_common()
    best_label, best_count = top[0]
    tied = [label for label, count in top if count == best_count]
    if len(tied) > 1:
        return predictions["cnn"]
    return best_label
