"""Ring/group stratified coreset.

Points are clustered around the center set ``C*`` and bucketed by how their
cost compares with their cluster's average cost (dyadic *rings*), then by
how much of a ring's cost their cluster holds (dyadic *groups*).  Very cheap
regions are collapsed onto their centers; every other group is sampled on
its own, proportionally to cost.

Conventions: rings are half-open, ``2^j avg <= cost < 2^(j+1) avg``; all
logarithms are base 2; a point at zero cost (or in a zero-cost cluster) is
in the inner ring.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .centers import CenterGenConfig, center_set_gen
from .core import (
    CenterSet,
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
    nearest_batch,
)
from .sampling import inverse_probability_sample
from .sketch import DEFAULT_C_M, DistanceEstimator

TAG_GROUP = 0x6E0B
TAG_SENSITIVITY = 0x5E45
TAG_GROUP_CENTERS = 0xCE37
TAG_GROUP_ASSIGN = 0xA552

NO_LEVEL = np.iinfo(np.int64).min  # zero cost: no finite ring level / band
_KEY_OFFSET = 1 << 32


class RingBucket(IntEnum):
    INNER = 0
    MAIN = 1
    OUTER = 2


class GroupKind(IntEnum):
    INNER = 0  # inner ring, collapsed onto its center
    CHEAP = 1  # main-ring band <= 0, collapsed onto its center
    INTERESTING = 2
    EXPENSIVE = 3  # main-ring band >= z log(4z/eps), sampled
    OUTER = 4
    OUTER_MIN = 5  # outer band < 0, collapsed onto its center
    OUTER_MAX = 6  # outer band >= z log(4z/eps), sampled as one group


DISCARDED_KINDS = (GroupKind.INNER, GroupKind.CHEAP, GroupKind.OUTER_MIN)


@dataclass
class ClusterStats:
    assigned: np.ndarray
    cost: np.ndarray
    size: np.ndarray
    total_cost: np.ndarray
    average_cost: np.ndarray


@dataclass
class RingPartition:
    cluster: np.ndarray
    level: np.ndarray  # NO_LEVEL where cost or cluster average is 0
    bucket: np.ndarray
    cost: np.ndarray
    j_lo: int
    j_hi: int

    def counts(self) -> dict[str, int]:
        return {b.name.lower(): int(np.sum(self.bucket == b)) for b in RingBucket}


@dataclass
class GroupPartition:
    kind: np.ndarray
    band: np.ndarray  # NO_LEVEL for inner points and zero-cost bands
    level: np.ndarray
    b_max: float

    def counts(self) -> dict[str, int]:
        return {g.name.lower(): int(np.sum(self.kind == g)) for g in GroupKind}

    def sampled_groups(self) -> dict[tuple[int, int, int], np.ndarray]:
        """Member indices of every group that is sampled, keyed and sorted deterministically.

        Interesting groups are keyed by ``(level, band)``; expensive groups of
        one level are merged, as are all outer-max points.
        """
        kinds = self.kind
        sampled = np.isin(kinds, [GroupKind.INTERESTING, GroupKind.EXPENSIVE,
                                  GroupKind.OUTER, GroupKind.OUTER_MAX])
        idx = np.flatnonzero(sampled)
        if idx.size == 0:
            return {}
        k = kinds[idx].astype(np.int64)
        lvl = np.where(np.isin(k, [GroupKind.INTERESTING, GroupKind.EXPENSIVE]),
                       self.level[idx] + _KEY_OFFSET, 0)
        bnd = np.where(np.isin(k, [GroupKind.INTERESTING, GroupKind.OUTER]),
                       self.band[idx] + _KEY_OFFSET, 0)
        keys = np.stack([k, lvl, bnd], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        order = np.argsort(inverse, kind="stable")
        splits = np.cumsum(np.bincount(inverse, minlength=len(uniq)))[:-1]
        members = np.split(idx[order], splits)
        return {tuple(int(v) for v in key): m for key, m in zip(uniq, members)}


def floor_log2(x) -> np.ndarray:
    """Exact ``floor(log2(x))`` for positive floats."""
    _, e = np.frexp(np.asarray(x, dtype=np.float64))
    return e.astype(np.int64) - 1


def ring_thresholds(z: float, eps: float) -> tuple[int, int]:
    """``(j_lo, j_hi)``: inner iff ``j <= j_lo``, outer iff ``j > j_hi``."""
    j_lo = math.floor(2 * z * math.log2(eps / z))
    j_hi = math.ceil(2 * z * math.log2(z / eps))
    return j_lo, j_hi


def band_limit(z: float, eps: float) -> float:
    return z * math.log2(4 * z / eps)


def assign_exact(U, Cstar, z: float) -> tuple[np.ndarray, np.ndarray]:
    return nearest_batch(U, Cstar, z)


def cluster_stats(U, Cstar, z: float, assignment=None) -> ClusterStats:
    """Per-cluster size, total cost and average cost under exact nearest assignment."""
    Cstar = as_centers(Cstar)
    z = check_power(z)
    assigned, cost = assignment if assignment is not None else assign_exact(U, Cstar, z)
    size = np.bincount(assigned, minlength=Cstar.k)
    total = np.bincount(assigned, weights=cost, minlength=Cstar.k)
    avg = np.divide(total, size, out=np.zeros(Cstar.k), where=size > 0)
    return ClusterStats(assigned, cost, size, total, avg)


def partition_rings(U, Cstar, z: float, eps: float, assignment=None) -> RingPartition:
    stats = cluster_stats(U, Cstar, z, assignment)
    j_lo, j_hi = ring_thresholds(z, eps)
    avg = stats.average_cost[stats.assigned]
    cost = stats.cost
    positive = (cost > 0) & (avg > 0)
    level = np.full(cost.shape[0], NO_LEVEL, dtype=np.int64)
    level[positive] = floor_log2(cost[positive] / avg[positive])
    bucket = np.full(cost.shape[0], RingBucket.MAIN, dtype=np.int64)
    bucket[~positive | (level <= j_lo)] = RingBucket.INNER
    bucket[positive & (level > j_hi)] = RingBucket.OUTER
    return RingPartition(stats.assigned, level, bucket, cost, j_lo, j_hi)


def _bands(part_cost: np.ndarray, whole_cost: np.ndarray, k: int, unit: float) -> np.ndarray:
    ratio = np.zeros_like(part_cost)
    ok = (part_cost > 0) & (whole_cost > 0)
    ratio[ok] = part_cost[ok] * k / (unit * whole_cost[ok])
    band = np.full(part_cost.shape[0], NO_LEVEL, dtype=np.int64)
    pos = ratio > 0
    band[pos] = floor_log2(ratio[pos])
    return band


def partition_groups(U, rings: RingPartition, Cstar, z: float, eps: float, k: int) -> GroupPartition:
    """Band each main-ring and outer-ring point by its cluster's share of the ring cost."""
    Cstar = as_centers(Cstar)
    z = check_power(z)
    n = rings.cost.shape[0]
    unit = (eps / (4 * z)) ** z
    b_max = band_limit(z, eps)
    kind = np.full(n, GroupKind.INNER, dtype=np.int64)
    band = np.full(n, NO_LEVEL, dtype=np.int64)

    main = np.flatnonzero(rings.bucket == RingBucket.MAIN)
    if main.size:
        lv = rings.level[main] - rings.j_lo  # >= 1
        n_lv = int(lv.max()) + 1
        pair = rings.cluster[main] * n_lv + lv
        _, pair_inv = np.unique(pair, return_inverse=True)
        pair_cost = np.bincount(pair_inv, weights=rings.cost[main])
        level_cost = np.bincount(lv, weights=rings.cost[main], minlength=n_lv)
        b = _bands(pair_cost[pair_inv], level_cost[lv], k, unit)
        band[main] = b
        kind[main] = np.where(b <= 0, GroupKind.CHEAP,
                              np.where(b >= b_max, GroupKind.EXPENSIVE, GroupKind.INTERESTING))

    outer = np.flatnonzero(rings.bucket == RingBucket.OUTER)
    if outer.size:
        cl = rings.cluster[outer]
        cluster_cost = np.bincount(cl, weights=rings.cost[outer], minlength=Cstar.k)
        whole = np.full(outer.size, float(np.sum(rings.cost[outer])))
        b = _bands(cluster_cost[cl], whole, k, unit)
        band[outer] = b
        kind[outer] = np.where(b < 0, GroupKind.OUTER_MIN,
                               np.where(b >= b_max, GroupKind.OUTER_MAX, GroupKind.OUTER))
    return GroupPartition(kind, band, rings.level.copy(), b_max)


def _cost_proportional(G, beta_size, Cstar, z, seed, costs, tag) -> WeightedPointSet:
    G = as_points(G)
    if isinstance(beta_size, bool) or int(beta_size) != beta_size or beta_size < 1:
        raise InputError(f"sample size must be a positive integer, got {beta_size!r}")
    if costs is None:
        _, costs = nearest_batch(G, Cstar, z)
    costs = np.asarray(costs, dtype=np.float64)
    rng = make_rng(seed, tag)
    if np.sum(costs) > 0:
        chosen, weights = inverse_probability_sample(costs, int(beta_size), rng)
    else:
        chosen, weights = inverse_probability_sample(np.ones(G.n), int(beta_size), rng)
    return WeightedPointSet(PointSet(G.data[chosen]), weights, chosen)


def group_sample(G, beta_size: int, Cstar, z: float, seed: int = 0, costs=None) -> WeightedPointSet:
    """Cost-proportional sample of a group with inverse-probability weights.

    ``source_indices`` of the result index into ``G``.  A group of zero total
    cost is sampled uniformly.
    """
    return _cost_proportional(G, beta_size, Cstar, z, seed, costs, TAG_GROUP)


def sensitivity_sample(G, beta_size: int, Cstar, z: float, seed: int = 0, costs=None) -> WeightedPointSet:
    """Sampler for outer groups; same law as :func:`group_sample`, separate stream."""
    return _cost_proportional(G, beta_size, Cstar, z, seed, costs, TAG_SENSITIVITY)


def group_sample_size(eps: float, delta: float, k: int, num_centers: int, c_beta: float = 1.0) -> int:
    raw = c_beta * eps**-2 * (k * math.log(num_centers) + math.log(math.log(1 / eps)) + math.log(1 / delta))
    return max(1, math.ceil(raw))


@dataclass(frozen=True)
class GroupCoresetConfig:
    c_beta: float = 1.0
    c_beta_outer: float = 1.0
    center_cfg: CenterGenConfig = field(default_factory=CenterGenConfig)
    seed: int = 0
    use_sketch: bool = False  # partition on sketch distances instead of exact ones
    eps1: float = 0.1
    delta1: float = 0.01
    c_m: float = DEFAULT_C_M
    exact: bool = False

    def __post_init__(self):
        if not (self.c_beta > 0 and self.c_beta_outer > 0):
            raise InputError("c_beta and c_beta_outer must be positive")
        check_seed(self.seed)


def coreset_gen_group(U, params: ClusteringParams, cfg: GroupCoresetConfig | None = None):
    """Ring/group coreset.  Returns ``(coreset, diagnostics)``.

    The output holds the centers of ``C*`` that absorbed collapsed points
    (weight = number of points absorbed) followed by every group sample.
    """
    cfg = cfg or GroupCoresetConfig()
    U = as_points(U)
    k, z, eps = params.k, params.z, params.eps
    if U.n < k:
        raise InputError(f"need at least k={k} points, got {U.n}")
    t0 = time.perf_counter()
    center_cfg = replace(cfg.center_cfg, seed=derive_seed(cfg.seed, TAG_GROUP_CENTERS),
                         exact=cfg.exact or cfg.center_cfg.exact)
    cg = center_set_gen(U, k, z, center_cfg)
    Cstar: CenterSet = cg.V
    t1 = time.perf_counter()

    if cfg.use_sketch:
        est = DistanceEstimator(Cstar.centers, cfg.eps1 / z, cfg.delta1,
                                seed=derive_seed(cfg.seed, TAG_GROUP_ASSIGN), c_m=cfg.c_m,
                                exact=cfg.exact)
        assignment = est.query_min_batch(U.data, z)
    else:
        assignment = assign_exact(U, Cstar, z)
    rings = partition_rings(U, Cstar, z, eps, assignment)
    groups = partition_groups(U, rings, Cstar, z, eps, k)
    t2 = time.perf_counter()

    discard = np.isin(groups.kind, DISCARDED_KINDS)
    center_weight = np.bincount(rings.cluster[discard], minlength=Cstar.k).astype(np.float64)
    keep = center_weight > 0
    pts = [Cstar.centers[keep]]
    wts = [center_weight[keep]]
    src = [Cstar.source_indices[keep]]

    beta_main = group_sample_size(eps, params.delta, k, Cstar.k, cfg.c_beta)
    beta_outer = group_sample_size(eps, params.delta, k, Cstar.k, cfg.c_beta_outer)
    sampled = groups.sampled_groups()
    n_interesting = n_outer = 0
    for key, members in sampled.items():
        outer = key[0] in (GroupKind.OUTER, GroupKind.OUTER_MAX)
        sampler = sensitivity_sample if outer else group_sample
        n_outer += outer
        n_interesting += not outer
        ws = sampler(U.data[members], beta_outer if outer else beta_main, Cstar, z,
                     seed=derive_seed(cfg.seed, TAG_GROUP, *key), costs=rings.cost[members])
        pts.append(ws.points.data)
        wts.append(ws.weights)
        src.append(members[ws.source_indices])
    t3 = time.perf_counter()

    coreset = WeightedPointSet(PointSet(np.concatenate(pts)), np.concatenate(wts), np.concatenate(src))
    diagnostics = {
        "method": "group",
        "num_centers": Cstar.k,
        "rounds": cg.rounds,
        "N": int(beta_main * n_interesting + beta_outer * n_outer),
        "coreset_size": coreset.n,
        "beta": beta_main,
        "beta_outer": beta_outer,
        "interesting_groups": n_interesting,
        "outer_groups": n_outer,
        "discarded_points": int(np.sum(discard)),
        "weighted_centers": int(np.sum(keep)),
        "center_weight_total": float(np.sum(center_weight)),
        "ring_counts": rings.counts(),
        "group_counts": groups.counts(),
        "timings_ms": {
            "center_set": (t1 - t0) * 1e3,
            "partition": (t2 - t1) * 1e3,
            "sample": (t3 - t2) * 1e3,
            "total": (t3 - t0) * 1e3,
        },
    }
    return coreset, diagnostics
