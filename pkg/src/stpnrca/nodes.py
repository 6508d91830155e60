"""Node inference: map weighted failed patterns to anomalous channels.

Each failed pattern a->b implicates its two endpoint channels; a channel's
anomaly score is the weight sum of the remaining failed patterns it touches
(self-patterns counted once). Channels are selected greedily by maximum
score, removing the patterns they explain, until every failed pattern is
covered — a weighted greedy cover of the failed-pattern edge set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .stpn import index_pattern


@dataclass(frozen=True)
class NodeInferenceResult:
    """Selection order, score at selection time, and per-step removals."""

    nodes: tuple[int, ...]
    scores: tuple[float, ...]
    removed: tuple[tuple[int, ...], ...]  # pattern indices cleared at each step


def _node_scores(failed: dict[int, float], f: int) -> np.ndarray:
    scores = np.zeros(f)
    for idx, weight in failed.items():
        a, b = index_pattern(idx, f)
        scores[a] += weight
        if b != a:
            scores[b] += weight
    return scores


def infer_nodes(failed, f: int) -> NodeInferenceResult:
    """Greedy cover of failed patterns by their incident channels.

    `failed` is an iterable of (pattern index, weight) pairs; duplicate
    indices accumulate weight. An empty input yields an empty result. Ties
    in the score go to the lowest channel index.
    """
    pool: dict[int, float] = {}
    for idx, weight in failed:
        idx = int(idx)
        if not 0 <= idx < f * f:
            raise DataError(f"pattern index {idx} out of range for f={f}")
        if not np.isfinite(weight):
            raise DataError(f"non-finite weight for pattern {idx}")
        pool[idx] = pool.get(idx, 0.0) + float(weight)

    nodes, scores, removed = [], [], []
    while pool:
        node_scores = _node_scores(pool, f)
        best = int(np.argmax(node_scores))  # argmax ties -> lowest index
        cleared = tuple(
            sorted(i for i in pool if best in index_pattern(i, f))
        )
        for i in cleared:
            del pool[i]
        nodes.append(best)
        scores.append(float(node_scores[best]))
        removed.append(cleared)
    return NodeInferenceResult(tuple(nodes), tuple(scores), tuple(removed))


def rank_nodes(failed, f: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Full channel ranking for diagnosis-cost evaluation.

    Covered channels come first in selection order; the rest follow by
    initial anomaly score (descending, ties to the lowest index).
    """
    failed = list(failed)
    result = infer_nodes(failed, f)
    initial = _node_scores(
        {int(i): float(w) for i, w in _accumulate(failed)}, f
    ) if failed else np.zeros(f)
    ranking = list(result.nodes)
    ranked_scores = list(result.scores)
    rest = [n for n in range(f) if n not in result.nodes]
    rest.sort(key=lambda n: (-initial[n], n))
    ranking.extend(rest)
    ranked_scores.extend(float(initial[n]) for n in rest)
    return tuple(ranking), tuple(ranked_scores)


def _accumulate(pairs):
    acc: dict[int, float] = {}
    for idx, weight in pairs:
        acc[int(idx)] = acc.get(int(idx), 0.0) + float(weight)
    return acc.items()
