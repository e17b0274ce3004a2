"""Classification accuracy and ROUGE-1/2/L summary scoring."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import ClassLabel, tokenize


@dataclass
class AccuracyReport:
    accuracy: float
    confusion: np.ndarray  # truth x predicted, 4x4 counts
    n: int


@dataclass(frozen=True)
class RougeScore:
    """Precision/recall/F1 on the 0-100 percent scale."""

    precision: float
    recall: float
    f1: float


def accuracy(predictions: list[ClassLabel], truth: list[ClassLabel]) -> AccuracyReport:
    if len(predictions) != len(truth):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(truth)} truth")
    if not predictions:
        raise ValueError("empty inputs")
    confusion = np.zeros((len(ClassLabel), len(ClassLabel)), dtype=np.int64)
    for pred, true in zip(predictions, truth):
        confusion[int(true), int(pred)] += 1
    n = len(truth)
    return AccuracyReport(float(np.trace(confusion)) / n, confusion, n)


def _f_score(matches: float, candidate_total: int, reference_total: int) -> RougeScore:
    p = matches / candidate_total if candidate_total else 0.0
    r = matches / reference_total if reference_total else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return RougeScore(p * 100.0, r * 100.0, f1 * 100.0)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """Clipped n-gram overlap F1 between two texts."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    matches = sum(min(count, ref.get(gram, 0)) for gram, count in cand.items())
    return _f_score(matches, sum(cand.values()), sum(ref.values()))


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest-common-subsequence length, O(|a|*|b|) dynamic program."""
    if not a or not b:
        return 0
    prev = np.zeros(len(b) + 1, dtype=np.int64)
    cur = np.zeros(len(b) + 1, dtype=np.int64)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev, cur = cur, prev
    return int(prev[len(b)])


def _lcs_words(a: list[str], b: list[str]) -> set[str]:
    # Words participating in one LCS of a and b (backtracked).
    m, n = len(a), len(b)
    dp = np.zeros((m + 1, n + 1), dtype=np.int64)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                dp[i, j] = dp[i - 1, j - 1] + 1
            else:
                dp[i, j] = max(dp[i - 1, j], dp[i, j - 1])
    words = set()
    i, j = m, n
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            words.add(a[i - 1])
            i -= 1
            j -= 1
        elif dp[i - 1, j] > dp[i, j - 1]:
            i -= 1
        else:
            j -= 1
    return words


_CLAUSE_SPLIT = re.compile(r"[.!?]")


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Summary-level LCS F1.

    Both texts are split into clauses at sentence punctuation; for every
    (reference clause, candidate clause) pair the LCS word set is collected
    into one global union, so each distinct word scores at most once.
    Precision and recall divide by the unique-token counts of each side.
    """
    cand_clauses = [tokenize(c) for c in _CLAUSE_SPLIT.split(candidate)]
    cand_clauses = [c for c in cand_clauses if c]
    ref_clauses = [tokenize(c) for c in _CLAUSE_SPLIT.split(reference)]
    ref_clauses = [c for c in ref_clauses if c]
    matched: set[str] = set()
    for ref in ref_clauses:
        for cand in cand_clauses:
            matched |= _lcs_words(ref, cand)
    n_cand = len({t for c in cand_clauses for t in c})
    n_ref = len({t for c in ref_clauses for t in c})
    return _f_score(len(matched), n_cand, n_ref)
