import math

import numpy as np
import pytest

from fastcoreset.core import ClusteringParams, WeightedPointSet, PointSet, cost_z
from fastcoreset.groups import (
    DISCARDED_KINDS,
    NO_LEVEL,
    GroupCoresetConfig,
    GroupKind,
    RingBucket,
    _bands,
    cluster_stats,
    coreset_gen_group,
    floor_log2,
    group_sample,
    group_sample_size,
    partition_groups,
    partition_rings,
    ring_thresholds,
    sensitivity_sample,
)


def test_cluster_average_example():
    U = np.array([[1.0], [-3.0]])
    s = cluster_stats(U, [[0.0]], 1)
    assert s.size.tolist() == [1 + 1]
    assert s.average_cost.tolist() == [2.0]


def test_cluster_stats_zero_cost():
    C = np.array([[0.0, 0.0], [5.0, 5.0]])
    U = np.repeat(C, 3, axis=0)
    s = cluster_stats(U, C, 2)
    assert s.average_cost.tolist() == [0.0, 0.0]
    rings = partition_rings(U, C, 2, 0.1)
    assert np.all(rings.bucket == RingBucket.INNER)


def test_cluster_totals_match_cost(rng):
    U = rng.normal(size=(400, 3))
    C = rng.normal(size=(6, 3))
    s = cluster_stats(U, C, 1.5)
    assert s.total_cost.sum() == pytest.approx(cost_z(U, C, 1.5), rel=1e-12)
    assert s.size.sum() == 400


def test_floor_log2_exact_at_powers():
    x = np.array([1.0, 2.0, 2.5, 0.5, 0.49, 8.0, 7.999])
    assert floor_log2(x).tolist() == [0, 1, 1, -1, -2, 3, 2]


def test_ring_level_example():
    # one cluster at 0 with costs 5, 0.5, 0.5 (average 2) under z=1
    U = np.array([[5.0], [0.5], [-0.5]])
    rings = partition_rings(U, [[0.0]], 1, 0.1)
    assert rings.level[0] == 1  # 4 <= 5 < 8


def test_ring_thresholds_example():
    assert ring_thresholds(2, 0.25)[0] == -12
    j_lo, j_hi = ring_thresholds(2, 0.25)
    assert j_hi == math.ceil(4 * math.log2(8))


def test_rings_partition_every_point(rng):
    U = rng.standard_t(2, size=(1000, 3))
    C = U[:10]
    rings = partition_rings(U, C, 2, 0.1)
    assert sum(rings.counts().values()) == 1000
    main = rings.bucket == RingBucket.MAIN
    assert np.all(rings.level[main] > rings.j_lo)
    assert np.all(rings.level[main] <= rings.j_hi)


def test_single_cluster_band_closed_form(rng):
    U = rng.normal(size=(300, 2))
    C = np.zeros((1, 2))
    z, eps, k = 2.0, 0.1, 3
    rings = partition_rings(U, C, z, eps)
    groups = partition_groups(U, rings, C, z, eps, k)
    main = rings.bucket == RingBucket.MAIN
    expected = math.floor(math.log2(k / (eps / (4 * z)) ** z))
    assert expected > 0
    assert np.all(groups.band[main] == expected)


def test_zero_cost_cluster_ring_is_cheap():
    band = _bands(np.array([0.0, 2.0]), np.array([4.0, 4.0]), 1, 0.5)
    assert band[0] == NO_LEVEL
    assert band[1] == 0  # 2*1/(0.5*4) = 1


def test_band_inequality_holds(rng):
    U = rng.standard_t(3, size=(2000, 2))
    C = U[:8]
    z, eps, k = 2.0, 0.1, 4
    rings = partition_rings(U, C, z, eps)
    groups = partition_groups(U, rings, C, z, eps, k)
    unit = (eps / (4 * z)) ** z
    main = np.flatnonzero(rings.bucket == RingBucket.MAIN)
    for x in main[:200]:
        same_level = main[rings.level[main] == rings.level[x]]
        ring_cost = rings.cost[same_level].sum()
        part = rings.cost[same_level[rings.cluster[same_level] == rings.cluster[x]]].sum()
        lo = unit * ring_cost / k * 2.0 ** groups.band[x]
        assert lo <= part * (1 + 1e-12) and part < 2 * lo * (1 + 1e-12)


def test_group_bucket_law_and_interesting_bound(rng):
    U = rng.standard_t(2, size=(3000, 3))
    C = U[:12]
    z, eps, k = 2.0, 0.1, 5
    rings = partition_rings(U, C, z, eps)
    g = partition_groups(U, rings, C, z, eps, k)
    assert sum(g.counts().values()) == 3000
    keys = [key for key in g.sampled_groups() if key[0] == GroupKind.INTERESTING]
    levels = rings.j_hi - rings.j_lo
    assert len(keys) <= levels * math.ceil(g.b_max)
    members = np.concatenate(list(g.sampled_groups().values()))
    assert np.unique(members).size == members.size
    discarded = np.isin(g.kind, DISCARDED_KINDS).sum()
    assert members.size + discarded == 3000


@pytest.mark.parametrize("sampler", [group_sample, sensitivity_sample])
def test_singleton_group_weight_one(sampler):
    ws = sampler(np.array([[3.0, 4.0]]), 7, [[0.0, 0.0]], 2, seed=1)
    assert ws.n == 1 and ws.weights[0] == pytest.approx(1.0)


@pytest.mark.parametrize("sampler", [group_sample, sensitivity_sample])
def test_uniform_cost_group_weight_sum(sampler):
    angles = np.linspace(0, 2 * np.pi, 25, endpoint=False)
    G = np.c_[np.cos(angles), np.sin(angles)]
    sums = np.array([sampler(G, 5, [[0.0, 0.0]], 2, seed=s).weights.sum() for s in range(10_000)])
    se = max(sums.std(ddof=1), 1e-12) / np.sqrt(sums.size)
    assert abs(sums.mean() - 25) <= 3 * se + 1e-9


@pytest.mark.parametrize("sampler", [group_sample, sensitivity_sample])
def test_group_sampler_unbiased(sampler, rng):
    G = rng.normal(size=(60, 2))
    Cstar = rng.normal(size=(3, 2))
    C0 = rng.normal(size=(2, 2)) * 2
    target = cost_z(G, C0, 2)
    ests = []
    for s in range(10_000):
        ws = sampler(G, 8, Cstar, 2, seed=s)
        ests.append(cost_z(ws, C0, 2))
    ests = np.array(ests)
    se = ests.std(ddof=1) / np.sqrt(ests.size)
    assert abs(ests.mean() - target) <= 3 * se


def test_zero_cost_group_uniform_fallback():
    G = np.zeros((10, 2))
    ws = group_sample(G, 20, [[0.0, 0.0]], 2, seed=0)
    assert ws.weights.sum() == pytest.approx(10.0)


def test_group_sample_size_formula():
    raw = 100 * (5 * math.log(40) + math.log(math.log(10)) + math.log(10))
    assert group_sample_size(0.1, 0.1, 5, 40) == math.ceil(raw)


def test_all_points_on_centers():
    sites = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0], [5.0, 5.0]])
    U = np.repeat(sites, 100, axis=0)
    ws, diag = coreset_gen_group(U, ClusteringParams(k=5), GroupCoresetConfig(seed=2))
    assert ws.n == 5
    assert ws.weights.sum() == 500
    order = np.lexsort(ws.points.data.T[::-1])
    assert np.array_equal(ws.points.data[order], sites[np.lexsort(sites.T[::-1])])
    assert np.all(ws.weights == 100)
    C = np.array([[3.0, -2.0], [7.0, 1.0]])
    assert cost_z(ws, C, 2) == pytest.approx(cost_z(U, C, 2), rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_center_weight_equals_discarded_count(seed):
    U = np.random.default_rng(seed).standard_t(3, size=(4000, 3))
    ws, diag = coreset_gen_group(U, ClusteringParams(k=3), GroupCoresetConfig(seed=seed))
    assert diag["center_weight_total"] == diag["discarded_points"]
    assert sum(diag["group_counts"].values()) == 4000
    assert sum(diag["ring_counts"].values()) == 4000
    assert 0.5 * 4000 <= ws.weights.sum() <= 2 * 4000


def test_group_coreset_deterministic(rng):
    U = rng.normal(size=(3000, 4))
    a, _ = coreset_gen_group(U, ClusteringParams(k=3), GroupCoresetConfig(seed=4))
    b, _ = coreset_gen_group(U, ClusteringParams(k=3), GroupCoresetConfig(seed=4))
    assert a.points.data.tobytes() == b.points.data.tobytes()
    assert a.weights.tobytes() == b.weights.tobytes()


def test_group_coreset_sketch_assignment(rng):
    U = rng.normal(size=(3000, 4))
    ws, diag = coreset_gen_group(U, ClusteringParams(k=3), GroupCoresetConfig(seed=4, use_sketch=True))
    assert sum(diag["group_counts"].values()) == 3000
    assert isinstance(ws, WeightedPointSet)
