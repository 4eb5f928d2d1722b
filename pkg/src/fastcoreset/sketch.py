"""Johnson-Lindenstrauss distance estimator over a mutable collection of centers.

The estimator stores ``m``-dimensional sketches ``Pi @ c_i`` and answers
distance and nearest-center queries in ``O(m (n + d))`` time per query
instead of ``O(n d)``.

Projection is bit-reproducible.  ``Pi`` holds Gaussian draws rounded to
multiples of 1/128 (integers up to 1023 before scaling), and every input row
is split into three 17-bit fixed-point slices relative to its largest
coordinate.  Each slice times the integer matrix is an exact float64
product, so the BLAS blocking order cannot change a single bit.  A vector
sketched alone, inside a batch, or on any thread gets the same sketch.
"""
from __future__ import annotations

import math

import numpy as np

from ._parallel import run_chunks
from .core import (
    InputError,
    as_points,
    block_rows,
    check_power,
    check_seed,
    make_rng,
    powered_from_sq,
    sq_distance_block,
)

DEFAULT_C_M = 8.0

_GAUSS_RES = 128.0
_GAUSS_CLIP = 1023.0
_SLICE_BITS = 17
_N_SLICES = 3
# exact slice products need |slice| * |Pi| * d < 2**53
_MAX_SKETCH_DIM_INPUT = 1 << 26

TAG_PROJECTION = 0x5EC7


def sketch_dim(n: int, eps: float, delta: float, c_m: float = DEFAULT_C_M) -> int:
    """``ceil(c_m * eps**-2 * ln(n / delta))``, before clamping to ``d``."""
    return int(math.ceil(c_m * eps**-2 * math.log(n / delta)))


def _check_accuracy(eps: float, delta: float) -> None:
    # 0.1 itself is accepted: it is the default accuracy everywhere
    if not 0.0 < eps <= 0.1:
        raise InputError(f"eps must lie in (0, 0.1], got {eps}")
    if not 0.0 < delta <= 0.1:
        raise InputError(f"delta must lie in (0, 0.1], got {delta}")


def quantized_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Integer-valued matrix ``round(128 * g)`` clipped to +-1023, g ~ N(0, 1)."""
    g = rng.standard_normal(shape)
    return np.clip(np.round(g * _GAUSS_RES), -_GAUSS_CLIP, _GAUSS_CLIP)


def exact_project(X: np.ndarray, int_matrix_t: np.ndarray) -> np.ndarray:
    """``X @ int_matrix_t`` computed so that each output row depends only on its input row."""
    amax = np.max(np.abs(X), axis=1)
    _, expo = np.frexp(amax)  # amax < 2**expo
    expo = np.where(amax > 0, expo, 0)
    a = np.ldexp(X, (_SLICE_BITS - expo)[:, None])
    acc = None
    for t in range(_N_SLICES):
        whole = np.trunc(a)
        part = np.ldexp(whole @ int_matrix_t, -_SLICE_BITS * (t + 1))
        acc = part if acc is None else acc + part
        a = np.ldexp(a - whole, _SLICE_BITS)
    return np.ldexp(acc, expo[:, None])


class DistanceEstimator:
    """Sketches of ``n`` centers supporting approximate distance queries.

    With probability at least ``1 - delta`` over the draw of ``Pi`` every
    returned distance is within a ``(1 +- eps)`` factor of the true one.
    When the sketch would be at least as wide as the data (``m >= d``), or
    ``exact=True``, ``Pi`` is the identity and all answers are exact.
    """

    def __init__(
        self,
        centers,
        eps: float = 0.1,
        delta: float = 0.01,
        seed: int = 0,
        *,
        c_m: float = DEFAULT_C_M,
        exact: bool = False,
    ):
        centers = as_points(centers).data
        _check_accuracy(eps, delta)
        if c_m <= 0:
            raise InputError(f"c_m must be positive, got {c_m}")
        self.n, self.d = centers.shape
        if self.d >= _MAX_SKETCH_DIM_INPUT:
            raise InputError(f"dimension {self.d} too large for exact projection")
        self.eps = float(eps)
        self.delta = float(delta)
        self.seed = check_seed(seed)
        self.c_m = float(c_m)
        self.m_formula = sketch_dim(self.n, eps, delta, c_m)
        self.identity = exact or self.m_formula >= self.d
        self.m = self.d if self.identity else self.m_formula
        if self.identity:
            self._pi_int_t = None
            self._pi_scale = 1.0
        else:
            rng = make_rng(self.seed, TAG_PROJECTION)
            pi_int = quantized_gaussian(rng, (self.m, self.d))
            self._pi_int_t = np.ascontiguousarray(pi_int.T)
            self._pi_scale = 1.0 / (_GAUSS_RES * math.sqrt(self.m))
        self.sketches = self.project(centers)
        self._ref = self.sketches.mean(axis=0)
        self._centered = self.sketches - self._ref
        self._sqnorms = np.sum(self._centered * self._centered, axis=1)

    @property
    def Pi(self) -> np.ndarray:
        """The ``m x d`` sketch matrix (identity in exact mode)."""
        if self.identity:
            return np.eye(self.d)
        return self._pi_int_t.T * self._pi_scale

    @property
    def nbytes(self) -> int:
        total = self.sketches.nbytes + self._centered.nbytes + self._sqnorms.nbytes
        if self._pi_int_t is not None:
            total += self._pi_int_t.nbytes
        return total

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.d:
            raise InputError(f"dimension mismatch: expected {self.d}, got {X.shape[1]}")
        if self.identity:
            return np.array(X, dtype=np.float64, copy=True)
        return exact_project(X, self._pi_int_t) * self._pi_scale

    def update(self, i: int, c) -> None:
        """Replace center ``i`` by ``c``.  Needs exclusive access."""
        if isinstance(i, bool) or not 0 <= int(i) < self.n:
            raise InputError(f"center index {i} out of range [0, {self.n})")
        c = np.asarray(c, dtype=np.float64).reshape(-1)
        if c.shape[0] != self.d:
            raise InputError(f"dimension mismatch: expected {self.d}, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise InputError("center has non-finite coordinates")
        v = self.project(c)[0]
        self.sketches[i] = v
        self._centered[i] = v - self._ref
        self._sqnorms[i] = np.sum(self._centered[i] * self._centered[i])

    def _check_queries(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim == 1:
            Q = Q.reshape(1, -1)
        if Q.ndim != 2 or Q.shape[1] != self.d:
            raise InputError(f"dimension mismatch: expected {self.d}, got shape {Q.shape}")
        if not np.all(np.isfinite(Q)):
            raise InputError("query has non-finite coordinates")
        return Q

    def _sq_block(self, Q: np.ndarray) -> np.ndarray:
        V = self.project(Q) - self._ref
        return sq_distance_block(V, self._centered, self._sqnorms)

    def query_batch(self, Q) -> np.ndarray:
        """Sketch distances (unpowered) from each row of ``Q`` to every center."""
        Q = self._check_queries(Q)
        out = np.empty((Q.shape[0], self.n))

        def work(start, stop):
            out[start:stop] = np.sqrt(self._sq_block(Q[start:stop]))

        run_chunks(work, Q.shape[0], block_rows(self.n))
        return out

    def query(self, q) -> np.ndarray:
        return self.query_batch(q)[0]

    def query_min_batch(self, Q, z: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Arg-min center (lowest index on ties) and its powered sketch distance."""
        Q = self._check_queries(Q)
        z = check_power(z)
        idx = np.empty(Q.shape[0], dtype=np.int64)
        sqmin = np.empty(Q.shape[0])

        def work(start, stop):
            sq = self._sq_block(Q[start:stop])
            j = np.argmin(sq, axis=1)
            idx[start:stop] = j
            sqmin[start:stop] = sq[np.arange(stop - start), j]

        run_chunks(work, Q.shape[0], block_rows(self.n))
        # z = 1 reduces to np.sqrt, the same rounding as query_batch
        return idx, powered_from_sq(sqmin, z)

    def query_min(self, q, z: float = 1.0) -> tuple[int, float]:
        idx, val = self.query_min_batch(q, z)
        return int(idx[0]), float(val[0])
