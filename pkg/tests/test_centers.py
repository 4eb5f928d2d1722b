import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastcoreset.centers import CenterGenConfig, center_set_gen, coverage_radius, max_rounds
from fastcoreset.core import InputError, cost_z


def sort_radius(values, beta):
    s = sorted(values)
    return s[max(1, math.ceil(beta * len(s))) - 1]


def test_coverage_radius_examples():
    assert coverage_radius([1, 2, 3, 4], 0.5) == 2
    assert coverage_radius([5], 0.01) == 5
    assert coverage_radius([5], 0.99) == 5


def test_coverage_radius_matches_sort(rng):
    vals = rng.exponential(size=10_000)
    assert coverage_radius(vals, 0.3) == sort_radius(vals.tolist(), 0.3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=60), st.floats(0.01, 0.99))
def test_coverage_radius_definition(values, beta):
    r = coverage_radius(values, beta)
    assert r == sort_radius(values, beta)
    assert sum(v <= r for v in values) >= math.ceil(beta * len(values))


def test_coverage_radius_errors():
    with pytest.raises(InputError):
        coverage_radius([], 0.5)
    with pytest.raises(InputError):
        coverage_radius([1.0], 1.0)


def test_small_input_returns_everything(rng):
    U = rng.normal(size=(16, 3))
    res = center_set_gen(U, 2, 2, CenterGenConfig(alpha=8))
    assert res.rounds == 0
    assert np.array_equal(res.V.centers, U)
    assert np.array_equal(res.tau, np.arange(16))
    assert cost_z(U, res.V, 2) == 0.0


def run(n=2000, d=5, k=4, z=2.0, seed=0, **cfg):
    U = np.random.default_rng(seed).normal(size=(n, d))
    return U, center_set_gen(U, k, z, CenterGenConfig(seed=seed, **cfg))


@pytest.mark.parametrize("seed", range(3))
def test_invariants(seed):
    U, res = run(seed=seed)
    n, k, alpha, beta = 2000, 4, 8.0, 0.5
    # removal rounds partition U
    assert np.all(res.removed_round >= 0) and np.all(res.removed_round <= res.rounds)
    per_round = np.bincount(res.removed_round, minlength=res.rounds + 1)
    assert per_round.sum() == n
    # tau lands in V; survivors map to themselves
    assert np.all((res.tau >= 0) & (res.tau < res.V.k))
    survivors = np.flatnonzero(res.removed_round == res.rounds)
    assert np.array_equal(res.V.source_indices[res.tau[survivors]], survivors)
    # shrinkage and size
    sizes = res.remaining_sizes
    for a, b in zip(sizes, sizes[1:]):
        assert b <= (1 - beta) * a + 1
    assert res.V.k <= math.floor(alpha * k) * (res.rounds + 1)
    assert res.rounds <= max_rounds(n, k, alpha, beta)
    # removed points are within their round's radius
    removed = res.removed_round < res.rounds
    radii = np.asarray(res.radii)[res.removed_round[removed]]
    assert np.all(res.dists[removed] <= radii)


def test_tau_distances_are_exact_in_identity_regime():
    U, res = run(seed=4)
    nearest = res.V.centers[res.tau]
    d2 = ((U - nearest) ** 2).sum(axis=1)
    assert np.allclose(res.dists, d2, rtol=1e-9, atol=1e-12)


def test_sketched_rounds_still_valid():
    U, res = run(n=1500, d=300, k=3, seed=1, c_m=0.3)
    assert res.removed_round.size == 1500
    assert np.all((res.tau >= 0) & (res.tau < res.V.k))


def test_deterministic():
    _, a = run(seed=7)
    _, b = run(seed=7)
    assert a.V.centers.tobytes() == b.V.centers.tobytes()
    assert a.tau.tobytes() == b.tau.tobytes()


def test_rounds_bound_for_small_planar_instance():
    for seed in range(10):
        U = np.random.default_rng(seed).uniform(size=(64, 2))
        res = center_set_gen(U, 2, 1, CenterGenConfig(alpha=4, beta=0.5, seed=seed))
        assert res.rounds <= math.ceil(math.log2(64 / 8)) + 1


def test_config_validation():
    with pytest.raises(InputError):
        CenterGenConfig(beta=1.0)
    with pytest.raises(InputError):
        CenterGenConfig(alpha=0.5)
    with pytest.raises(InputError):
        center_set_gen(np.ones((3, 2)), 0, 2)
