"""Data model and exact geometry for (k, z)-clustering.

All costs are powered Euclidean distances ``||x - c||_2 ** z``.  Batch
kernels use the ``|q|^2 + |c|^2 - 2 q.c`` expansion for speed, then
recompute directly every entry that is either close to zero or close to its
row minimum, so exact duplicates give exactly 0 and ties are resolved on
directly computed values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._parallel import run_chunks

UINT64_MAX = 2**64 - 1

# entries below this fraction of |q|^2 + |c|^2 are recomputed directly
_SMALL_REL = 1e-6
# slack (same scale) around the row minimum inside which entries are recomputed
_TIE_REL = 1e-9
_REFINE_BATCH_FLOATS = 1 << 20


class InputError(ValueError):
    """Invalid argument or malformed input data."""


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise InputError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= UINT64_MAX:
        raise InputError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed: int, *tags: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and a path of non-negative integer tags.

    Gaussian draws from it use numpy's ziggurat sampler, which is
    platform-independent for a given bit stream.
    """
    entropy = [check_seed(seed)] + [int(t) for t in tags]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *tags: int) -> int:
    """A 64-bit child seed, a pure function of ``seed`` and ``tags``."""
    entropy = [check_seed(seed)] + [int(t) for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointSet:
    """``n`` points in ``R^d`` stored as a read-only float64 ``(n, d)`` matrix."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if data.ndim == 1:
            data = data.reshape(1, -1)
        if data.ndim != 2:
            raise InputError(f"points must be a 2-d matrix, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InputError(f"need n >= 1 and d >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            bad = int(np.argwhere(~np.isfinite(data))[0][0])
            raise InputError(f"non-finite coordinate in point {bad}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i) -> np.ndarray:
        return self.data[i]


@dataclass(frozen=True)
class WeightedPointSet:
    """Points with non-negative weights; the output type of every sampler.

    ``source_indices`` optionally records where each row came from in the
    originating point set.
    """

    points: PointSet
    weights: np.ndarray
    source_indices: Optional[np.ndarray] = None

    def __post_init__(self):
        points = self.points if isinstance(self.points, PointSet) else PointSet(self.points)
        object.__setattr__(self, "points", points)
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if w.shape[0] != points.n:
            raise InputError(f"{w.shape[0]} weights for {points.n} points")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and non-negative")
        object.__setattr__(self, "weights", _frozen(w))
        if self.source_indices is not None:
            src = np.array(self.source_indices, dtype=np.int64, copy=True).reshape(-1)
            if src.shape[0] != points.n:
                raise InputError("source_indices length differs from point count")
            object.__setattr__(self, "source_indices", _frozen(src))

    @classmethod
    def unit(cls, points) -> "WeightedPointSet":
        points = as_points(points)
        return cls(points, np.ones(points.n))

    @property
    def n(self) -> int:
        return self.points.n

    @property
    def d(self) -> int:
        return self.points.d

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class CenterSet:
    centers: np.ndarray
    source_indices: Optional[np.ndarray] = None

    def __post_init__(self):
        c = PointSet(self.centers).data  # reuses validation
        object.__setattr__(self, "centers", c)
        if self.source_indices is not None:
            src = np.array(self.source_indices, dtype=np.int64, copy=True).reshape(-1)
            if src.shape[0] != c.shape[0]:
                raise InputError("source_indices length differs from center count")
            if np.any(src < 0):
                raise InputError("source_indices must be non-negative")
            object.__setattr__(self, "source_indices", _frozen(src))

    @classmethod
    def from_indices(cls, points, indices) -> "CenterSet":
        points = as_points(points)
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            raise InputError("center set must be non-empty")
        if idx.min() < 0 or idx.max() >= points.n:
            raise InputError("center index out of range")
        return cls(points.data[idx], idx)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return self.k


@dataclass(frozen=True)
class ClusteringParams:
    """Problem parameters.  ``relaxed=True`` lifts the ``eps, delta <= 0.1`` caps."""

    k: int
    z: float = 2.0
    eps: float = 0.1
    delta: float = 0.1
    relaxed: bool = field(default=False, compare=False)

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise InputError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        check_power(self.z)
        cap = 1.0 if self.relaxed else 0.1
        for name in ("eps", "delta"):
            v = getattr(self, name)
            if not (0.0 < v <= cap) or (self.relaxed and v >= 1.0):
                raise InputError(f"{name} must lie in (0, {cap}], got {v}")


def as_points(x) -> PointSet:
    if isinstance(x, PointSet):
        return x
    if isinstance(x, WeightedPointSet):
        return x.points
    return PointSet(x)


def as_weighted(x) -> WeightedPointSet:
    if isinstance(x, WeightedPointSet):
        return x
    return WeightedPointSet.unit(x)


def as_centers(c) -> CenterSet:
    if isinstance(c, CenterSet):
        return c
    if isinstance(c, PointSet):
        return CenterSet(c.data)
    arr = np.asarray(c, dtype=np.float64)
    if arr.size == 0:
        raise InputError("center set must be non-empty")
    return CenterSet(arr)


def check_power(z) -> float:
    z = float(z)
    if not np.isfinite(z) or z < 1.0:
        raise InputError(f"power z must be a finite real >= 1, got {z}")
    return z


def powered_from_sq(sq, z: float):
    """``sqrt(sq) ** z`` for squared distances ``sq``.

    Integer powers use repeated multiplication (on ``sq`` itself when ``z``
    is even); other powers go through ``exp(z * log r)`` with ``r = 0``
    mapped to 0.
    """
    sq = np.asarray(sq, dtype=np.float64)
    if z == 2.0:
        return sq.copy() if sq.ndim else sq
    if float(z).is_integer():
        p = int(z)
        base = sq if p % 2 == 0 else np.sqrt(sq)
        reps = p // 2 if p % 2 == 0 else p
        out = np.array(base, dtype=np.float64, copy=True)
        for _ in range(reps - 1):
            out = out * base
        return out
    r = np.sqrt(sq)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, np.exp(z * np.log(np.where(r > 0, r, 1.0))), 0.0)


def _vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite coordinates")
    return v


def dist_z(x, y, z: float) -> float:
    """``||x - y||_2 ** z``."""
    x = _vector(x, "x")
    y = _vector(y, "y")
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    z = check_power(z)
    diff = x - y
    return float(powered_from_sq(np.sum(diff * diff), z))


def point_to_set(x, C, z: float) -> tuple[int, float]:
    """Nearest center of ``C`` to ``x`` and its powered distance; lowest index wins ties."""
    C = as_centers(C)
    x = _vector(x, "x")
    if x.shape[0] != C.d:
        raise InputError(f"dimension mismatch: point has {x.shape[0]}, centers have {C.d}")
    z = check_power(z)
    diff = C.centers - x
    sq = np.sum(diff * diff, axis=1)
    i = int(np.argmin(sq))
    return i, float(powered_from_sq(sq[i], z))


def _refine(sq, Q, C, mask) -> None:
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return
    step = max(1, _REFINE_BATCH_FLOATS // max(Q.shape[1], 1))
    for s in range(0, rows.size, step):
        r, c = rows[s : s + step], cols[s : s + step]
        diff = Q[r] - C[c]
        sq[r, c] = np.sum(diff * diff, axis=1)


def sq_distance_block(Q: np.ndarray, C: np.ndarray, c_sqnorm: np.ndarray) -> np.ndarray:
    """Squared distances between rows of ``Q`` and rows of ``C``.

    Callers should centre both operands on a common reference point first;
    the expansion is accurate relative to ``|q|^2 + |c|^2``.
    """
    q_sqnorm = np.sum(Q * Q, axis=1)
    scale = q_sqnorm[:, None] + c_sqnorm[None, :]
    sq = scale - 2.0 * (Q @ C.T)
    np.maximum(sq, 0.0, out=sq)
    rowmin = sq.min(axis=1, keepdims=True)
    mask = (sq <= _SMALL_REL * scale) | (sq <= rowmin + _TIE_REL * scale)
    _refine(sq, Q, C, mask)
    return sq


def block_rows(n_centers: int) -> int:
    """Fixed query-chunk height; depends on shapes only, never on thread count."""
    return int(min(2048, max(16, (1 << 21) // max(n_centers, 1))))


def nearest_batch(X, C, z: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest-center index and powered distance for every row of ``X``."""
    X = as_points(X).data
    C = as_centers(C).centers
    if X.shape[1] != C.shape[1]:
        raise InputError(f"dimension mismatch: points have {X.shape[1]}, centers {C.shape[1]}")
    z = check_power(z)
    ref = C.mean(axis=0)
    Cc = C - ref
    c_sqnorm = np.sum(Cc * Cc, axis=1)
    n = X.shape[0]
    idx = np.empty(n, dtype=np.int64)
    sqmin = np.empty(n, dtype=np.float64)

    def work(start: int, stop: int) -> None:
        sq = sq_distance_block(X[start:stop] - ref, Cc, c_sqnorm)
        j = np.argmin(sq, axis=1)
        idx[start:stop] = j
        sqmin[start:stop] = sq[np.arange(stop - start), j]

    run_chunks(work, n, block_rows(C.shape[0]))
    return idx, powered_from_sq(sqmin, z)


def cost_z(U, C, z: float) -> float:
    """Weighted clustering cost ``sum_i w_i * min_c ||x_i - c||^z``.

    Plain point sets count each point once.  The sum is numpy's pairwise
    reduction over the per-point terms, so its order is fixed.
    """
    U = as_weighted(U)
    _, per_point = nearest_batch(U.points, C, z)
    return float(np.sum(U.weights * per_point))
