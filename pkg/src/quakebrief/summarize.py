"""Unsupervised extractive summarization: similarity graph + damped PageRank."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Sentence, tokenize


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"pagerank did not converge in {iterations} iterations (residual {residual:.3e})")
        self.residual = residual


@dataclass
class SimilarityGraph:
    weights: np.ndarray  # symmetric, zero diagonal

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


def _pair_weight(a: set[str], b: set[str]) -> float:
    common = len(a & b)
    if common == 0:
        return 0.0
    denom = math.log(len(a)) + math.log(len(b))
    # Both sides single-token: the log-normalizer vanishes, fall back to the
    # raw overlap count.
    if denom == 0.0:
        return float(common)
    return common / denom


def build_similarity_graph(token_lists: list[list[str]]) -> SimilarityGraph:
    """Edge weight = shared unique tokens, normalized by log sentence sizes."""
    if not token_lists:
        raise ValueError("cannot build a similarity graph from zero sentences")
    sets = [set(tokens) for tokens in token_lists]
    n = len(sets)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w = _pair_weight(sets[i], sets[j])
            weights[i, j] = weights[j, i] = w
    return SimilarityGraph(weights)


def pagerank(
    graph: SimilarityGraph,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> np.ndarray:
    """Weighted PageRank from a uniform start; dangling nodes spread uniformly."""
    if not 0 < damping < 1:
        raise ValueError(f"damping must be in (0,1), got {damping}")
    n = graph.n_nodes
    w = graph.weights
    out_sums = w.sum(axis=1)
    dangling = out_sums == 0
    safe_sums = np.where(dangling, 1.0, out_sums)
    transition = w / safe_sums[:, None]  # row-stochastic on non-dangling rows
    scores = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        dangling_mass = scores[dangling].sum()
        new = (1 - damping) / n + damping * (transition.T @ scores + dangling_mass / n)
        residual = float(np.max(np.abs(new - scores)))
        scores = new
        if residual < tol:
            return scores / scores.sum()
    raise ConvergenceError(residual, max_iter)


def extract_summary(
    sentences: list[Sentence],
    ratio: float = 0.3,
    min_sentences: int = 1,
    max_sentences: int = 15,
) -> list[Sentence]:
    """Pick the top-ranked sentences, returned verbatim in document order.

    Sentences with identical token sets (wire-copy repeats) collapse to the
    earliest occurrence before ranking. Rank ties go to the earlier position.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must be in (0,1], got {ratio}")
    if not sentences:
        return []
    seen: dict[frozenset, int] = {}
    kept: list[int] = []
    for pos, sentence in enumerate(sentences):
        key = frozenset(tokenize(sentence.text))
        if key not in seen:
            seen[key] = pos
            kept.append(pos)
    graph = build_similarity_graph([tokenize(sentences[p].text) for p in kept])
    scores = pagerank(graph)
    target = math.ceil(ratio * len(kept))
    target = max(min_sentences, min(target, max_sentences, len(kept)))
    order = sorted(range(len(kept)), key=lambda i: (-scores[i], kept[i]))
    chosen = sorted(kept[i] for i in order[:target])
    return [sentences[p] for p in chosen]
