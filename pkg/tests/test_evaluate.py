from collections import Counter
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quakebrief.corpus import ClassLabel, tokenize
from quakebrief.evaluate import RougeScore, accuracy, lcs_length, rouge_l, rouge_n

WORDS = st.lists(st.sampled_from("the cat sat on a mat dog ran big red".split()), max_size=12)


class TestAccuracy:
    def test_three_of_four(self):
        b, i = ClassLabel.building, ClassLabel.infrastructure
        report = accuracy([b, b, b, b], [b, b, b, i])
        assert report.accuracy == 0.75

    def test_identity(self):
        truth = [ClassLabel(k % 4) for k in range(8)]
        report = accuracy(truth, truth)
        assert report.accuracy == 1.0
        assert np.all(report.confusion == np.diag(np.diag(report.confusion)))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([ClassLabel.other], [])

    def test_confusion_rows_sum_to_truth_counts(self):
        rng = np.random.default_rng(3)
        truth = [ClassLabel(int(v)) for v in rng.integers(0, 4, 60)]
        preds = [ClassLabel(int(v)) for v in rng.integers(0, 4, 60)]
        report = accuracy(preds, truth)
        counts = Counter(int(t) for t in truth)
        for label in range(4):
            assert report.confusion[label].sum() == counts.get(label, 0)

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(4)
        truth = [ClassLabel(int(v)) for v in rng.integers(0, 4, 40)]
        preds = [ClassLabel(int(v)) for v in rng.integers(0, 4, 40)]
        report = accuracy(preds, truth)
        perm = rng.permutation(40)
        shuffled = accuracy([preds[i] for i in perm], [truth[i] for i in perm])
        assert shuffled.accuracy == report.accuracy
        assert np.array_equal(shuffled.confusion, report.confusion)


def brute_force_rouge_n(candidate, reference, n):
    # independent multiset-intersection oracle
    def grams(text):
        toks = tokenize(text)
        return Counter(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1))

    c, r = grams(candidate), grams(reference)
    overlap = sum((c & r).values())
    p = overlap / sum(c.values()) if c else 0.0
    rr = overlap / sum(r.values()) if r else 0.0
    f1 = 2 * p * rr / (p + rr) if p + rr else 0.0
    return p * 100, rr * 100, f1 * 100


class TestRougeN:
    def test_identical_texts(self):
        for n in (1, 2):
            assert rouge_n("the quick brown fox", "the quick brown fox", n).f1 == pytest.approx(100.0)

    def test_hand_counted_unigrams(self):
        score = rouge_n("the cat sat", "the cat", 1)
        assert score.precision == pytest.approx(100 * 2 / 3)
        assert score.recall == pytest.approx(100.0)
        assert score.f1 == pytest.approx(80.0)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            rouge_n("a", "b", 0)

    def test_empty_sides(self):
        assert rouge_n("", "some words", 1) == RougeScore(0.0, 0.0, 0.0)

    @given(WORDS, WORDS, st.sampled_from([1, 2]))
    def test_matches_brute_force_oracle(self, cand, ref, n):
        score = rouge_n(" ".join(cand), " ".join(ref), n)
        p, r, f1 = brute_force_rouge_n(" ".join(cand), " ".join(ref), n)
        assert score.precision == pytest.approx(p)
        assert score.recall == pytest.approx(r)
        assert score.f1 == pytest.approx(f1)

    @given(WORDS, WORDS)
    def test_range_and_f1_bound(self, cand, ref):
        score = rouge_n(" ".join(cand), " ".join(ref), 1)
        assert 0.0 <= score.f1 <= 100.0
        assert score.f1 <= max(score.precision, score.recall) + 1e-9


def memo_lcs(a, b):
    # recursive-memoized LCS-length oracle
    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return rec(i - 1, j - 1) + 1
        return max(rec(i - 1, j), rec(i, j - 1))

    return rec(len(a), len(b))


class TestRougeL:
    def test_identical(self):
        assert rouge_l("rescuers dug through rubble", "rescuers dug through rubble").f1 == pytest.approx(100.0)

    def test_hand_computed(self):
        score = rouge_l("a b c d", "a c d")
        assert score.precision == pytest.approx(75.0)
        assert score.recall == pytest.approx(100.0)
        assert score.f1 == pytest.approx(100 * 6 / 7)

    def test_empty_side(self):
        assert rouge_l("", "words here") == RougeScore(0.0, 0.0, 0.0)

    @given(st.lists(st.sampled_from("a b c d".split()), max_size=10),
           st.lists(st.sampled_from("a b c d".split()), max_size=10))
    def test_lcs_matches_memoized_oracle(self, a, b):
        assert lcs_length(a, b) == memo_lcs(tuple(a), tuple(b))

    @given(WORDS, WORDS)
    def test_range_and_f1_bound(self, cand, ref):
        score = rouge_l(" ".join(cand), " ".join(ref))
        assert 0.0 <= score.f1 <= 100.0
        assert score.f1 <= max(score.precision, score.recall) + 1e-9

    @given(st.lists(st.sampled_from("w x y z".split()), min_size=1, max_size=8, unique=True))
    def test_single_clause_unique_tokens_reduces_to_plain_lcs(self, tokens):
        # with all-unique tokens and no punctuation the summary-level union
        # equals the plain LCS formula
        cand = " ".join(tokens)
        ref = " ".join(reversed(tokens))
        lcs = lcs_length(tokens, list(reversed(tokens)))
        score = rouge_l(cand, ref)
        n = len(tokens)
        expected_f1 = 100 * 2 * (lcs / n) * (lcs / n) / (2 * lcs / n) if lcs else 0.0
        assert score.f1 == pytest.approx(expected_f1)
