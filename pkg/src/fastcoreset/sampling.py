"""Weighted i.i.d. sampling with Vose's alias method."""
from __future__ import annotations

import numpy as np

from .core import InputError


class AliasTable:
    """O(n) build, O(1) per draw sampler for a fixed discrete distribution."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.size == 0:
            raise InputError("cannot sample from an empty distribution")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("sampling weights must be finite and non-negative")
        total = float(np.sum(w))
        if not total > 0:
            raise InputError("sampling weights sum to zero")
        n = w.size
        scaled = w * (n / total)
        prob = np.ones(n)
        alias = np.arange(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias
        self.n = n

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        slot = rng.integers(0, self.n, size=size)
        keep = rng.random(size) < self.prob[slot]
        return np.where(keep, slot, self.alias[slot])

    def counts(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.bincount(self.draw(rng, size), minlength=self.n)


def inverse_probability_sample(scores, size: int, rng: np.random.Generator):
    """Draw ``size`` indices i.i.d. with probability ``scores / sum(scores)``.

    Returns ``(indices, weights)`` with repeated draws merged: each draw of
    ``i`` contributes ``sum(scores) / (size * scores[i])``.
    """
    if isinstance(size, bool) or int(size) != size or size < 1:
        raise InputError(f"sample size must be a positive integer, got {size!r}")
    scores = np.asarray(scores, dtype=np.float64)
    table = AliasTable(scores)
    counts = table.counts(rng, int(size))
    chosen = np.flatnonzero(counts)
    total = float(np.sum(scores))
    weights = counts[chosen] * (total / (size * scores[chosen]))
    return chosen, weights
