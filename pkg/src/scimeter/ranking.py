"""Rank aggregation and percentile tagging shared by the three measures."""

from __future__ import annotations

import math


def descending_ranks(values: list[float]) -> list[float]:
    """Competition-free average ranks, 1 = largest value, ties share the mean
    of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: -values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def tag_top_fraction(scores: dict[str, float], pct: float,
                     largest: bool = True) -> set[str]:
    """Ids of the top ceil(pct*N) scores, boundary ties inclusive.

    largest=False selects the bottom of the distribution instead (used for
    declining tags). pct=0 tags nothing.
    """
    if not 0.0 <= pct <= 1.0:
        raise ValueError("pct must be in [0, 1]")
    n = len(scores)
    if n == 0 or pct == 0.0:
        return set()
    k = math.ceil(pct * n)
    ordered = sorted(scores.values(), reverse=largest)
    threshold = ordered[k - 1]
    if largest:
        return {i for i, s in scores.items() if s >= threshold}
    return {i for i, s in scores.items() if s <= threshold}
