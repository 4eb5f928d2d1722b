"""Importance-sampling coreset built on a sketched center set.

Every point gets the score

    d~(x, c~(x)) / cost~(U, C*)  +  1 / |X_{c~(x)}|

where ``c~(x)`` is its sketch-nearest member of the center set ``C*``,
``d~`` the powered sketch distance and ``X_v`` the points sent to ``v``.
The coreset is ``N`` i.i.d. draws proportional to the score, each weighted
by the inverse of its draw probability over ``N``.  The constant factor that
usually multiplies this score is left out since it cancels in both the
probabilities and the weights.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .centers import CenterGenConfig, center_set_gen
from .core import (
    ClusteringParams,
    InputError,
    PointSet,
    WeightedPointSet,
    as_centers,
    as_points,
    check_power,
    check_seed,
    derive_seed,
    make_rng,
)
from .sampling import inverse_probability_sample
from .sketch import DEFAULT_C_M, DistanceEstimator

TAG_ASSIGN = 0xA551
TAG_SAMPLE = 0x5A3B
TAG_CENTERS = 0xCE27


@dataclass
class ScoreTable:
    assigned: np.ndarray
    approx_dist: np.ndarray
    preimage_size: np.ndarray
    approx_total_cost: float
    score: np.ndarray
    total_score: float

    @property
    def probabilities(self) -> np.ndarray:
        return self.score / self.total_score


@dataclass(frozen=True)
class CoresetConfig:
    """Knobs for :func:`coreset_gen`.

    ``N=None`` picks the size ``c_N * eps^(-2z-2) * k * ln k * ln(k / (eps delta))``
    clamped to ``[1, n]``.  The center-set stage runs with ``center_cfg`` but
    its seed is derived from ``seed``.
    """

    N: Optional[int] = None
    eps1: float = 0.1
    delta1: float = 0.01
    c_N: float = 1.0
    c_m: float = DEFAULT_C_M
    center_cfg: CenterGenConfig = field(default_factory=CenterGenConfig)
    seed: int = 0
    exact: bool = False

    def __post_init__(self):
        if self.N is not None and (isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1):
            raise InputError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 < self.eps1 <= 0.1:
            raise InputError(f"eps1 must lie in (0, 0.1], got {self.eps1}")
        if not 0.0 < self.delta1 <= 0.1:
            raise InputError(f"delta1 must lie in (0, 0.1], got {self.delta1}")
        if not self.c_N > 0:
            raise InputError(f"c_N must be positive, got {self.c_N}")
        check_seed(self.seed)


def default_sample_size(n: int, params: ClusteringParams, c_N: float = 1.0) -> int:
    k, z, eps, delta = params.k, params.z, params.eps, params.delta
    raw = c_N * eps ** (-2 * z - 2) * k * math.log(k) * math.log(k / (eps * delta))
    return int(min(n, max(1, math.ceil(raw))))


def assign_and_score(U, Cstar, z: float, eps1: float = 0.1, delta1: float = 0.01,
                     seed: int = 0, *, c_m: float = DEFAULT_C_M, exact: bool = False) -> ScoreTable:
    """Sketch-assign every point to ``Cstar`` and compute its sampling score."""
    U = as_points(U)
    Cstar = as_centers(Cstar)
    z = check_power(z)
    est = DistanceEstimator(Cstar.centers, eps1 / z, delta1, seed=seed, c_m=c_m, exact=exact)
    assigned, approx_dist = est.query_min_batch(U.data, z)
    pre = np.bincount(assigned, minlength=Cstar.k)
    total = float(np.sum(approx_dist))
    inv_pre = 1.0 / pre[assigned]
    if total > 0:
        score = approx_dist / total + inv_pre
    else:
        score = inv_pre
    return ScoreTable(
        assigned=assigned,
        approx_dist=approx_dist,
        preimage_size=pre,
        approx_total_cost=total,
        score=score,
        total_score=float(np.sum(score)),
    )


def sample_coreset(U, table: ScoreTable, N: int, seed: int = 0) -> WeightedPointSet:
    """``N`` i.i.d. score-proportional draws; duplicate draws are merged."""
    U = as_points(U)
    if table.score.shape[0] != U.n:
        raise InputError("score table does not match the point set")
    rng = make_rng(seed, TAG_SAMPLE)
    chosen, weights = inverse_probability_sample(table.score, N, rng)
    return WeightedPointSet(PointSet(U.data[chosen]), weights, chosen)


def coreset_gen(U, params: ClusteringParams, cfg: CoresetConfig | None = None):
    """Center set, then scores, then sampling.  Returns ``(coreset, diagnostics)``."""
    cfg = cfg or CoresetConfig()
    U = as_points(U)
    if U.n < params.k:
        raise InputError(f"need at least k={params.k} points, got {U.n}")
    timings = {}

    t0 = time.perf_counter()
    center_cfg = replace(cfg.center_cfg, seed=derive_seed(cfg.seed, TAG_CENTERS),
                         exact=cfg.exact or cfg.center_cfg.exact)
    cg = center_set_gen(U, params.k, params.z, center_cfg)
    t1 = time.perf_counter()
    table = assign_and_score(U, cg.V, params.z, cfg.eps1, cfg.delta1,
                             seed=derive_seed(cfg.seed, TAG_ASSIGN), c_m=cfg.c_m, exact=cfg.exact)
    t2 = time.perf_counter()
    N = cfg.N if cfg.N is not None else default_sample_size(U.n, params, cfg.c_N)
    coreset = sample_coreset(U, table, N, seed=cfg.seed)
    t3 = time.perf_counter()

    timings["center_set"] = (t1 - t0) * 1e3
    timings["assign_score"] = (t2 - t1) * 1e3
    timings["sample"] = (t3 - t2) * 1e3
    timings["total"] = (t3 - t0) * 1e3
    diagnostics = {
        "method": "is",
        "num_centers": cg.V.k,
        "rounds": cg.rounds,
        "N": int(N),
        "coreset_size": coreset.n,
        "total_score": table.total_score,
        "approx_total_cost": table.approx_total_cost,
        "timings_ms": timings,
    }
    return coreset, diagnostics
