import math

import numpy as np
import pytest

from fastcoreset.core import InputError
from fastcoreset.sketch import DistanceEstimator, exact_project, quantized_gaussian, sketch_dim


def exact_dists(Q, C):
    return np.sqrt(((Q[:, None, :] - C[None, :, :]) ** 2).sum(axis=2))


def sketched(n=10, d=400, seed=0, rng=None, **kw):
    """A genuinely projecting estimator (m well below d)."""
    rng = rng or np.random.default_rng(seed)
    C = rng.normal(size=(n, d))
    kw.setdefault("c_m", 0.25)
    est = DistanceEstimator(C, 0.1, 0.1, seed=seed, **kw)
    assert not est.identity and est.m < d
    return est, C


def test_sketch_dim_matches_hand_formula():
    # ceil(8 * 100 * ln(1e5)) with ln(1e5) = 11.5129..., i.e. ceil(9210.34)
    expected = math.ceil(8 * 0.1**-2 * math.log(1000 / 0.01))
    assert expected == 9211
    assert sketch_dim(1000, 0.1, 0.01, 8) == expected


def test_identity_when_sketch_wider_than_data():
    est = DistanceEstimator(np.ones((1000, 500)), 0.1, 0.01)
    assert est.m_formula == 9211
    assert est.identity and est.m == 500


def test_single_point_self_distance():
    est = DistanceEstimator([[3.25]], 0.1, 0.1)
    assert est.query([3.25])[0] == 0.0


@pytest.mark.parametrize("kwargs", [dict(eps=0.0), dict(eps=0.2), dict(delta=0.0), dict(delta=0.5)])
def test_accuracy_parameters_out_of_range(kwargs):
    args = dict(eps=0.1, delta=0.1) | kwargs
    with pytest.raises(InputError):
        DistanceEstimator(np.ones((3, 2)), args["eps"], args["delta"])


def test_empty_center_set_rejected():
    with pytest.raises(InputError):
        DistanceEstimator(np.empty((0, 4)))


def test_same_seed_gives_identical_tables():
    a, C = sketched(seed=3)
    b = DistanceEstimator(C, 0.1, 0.1, seed=3, c_m=0.25)
    assert a.sketches.tobytes() == b.sketches.tobytes()
    c = DistanceEstimator(C, 0.1, 0.1, seed=4, c_m=0.25)
    assert c.sketches.tobytes() != a.sketches.tobytes()


def test_projection_row_independent_of_batch(rng):
    P = quantized_gaussian(rng, (60, 300)).T.copy()
    X = rng.normal(size=(257, 300)) * rng.uniform(1e-3, 1e3, size=(257, 1))
    full = exact_project(X, P)
    for i in (0, 1, 100, 256):
        assert exact_project(X[i : i + 1], P).tobytes() == full[i : i + 1].tobytes()
    # truncation error is relative to the magnitude of the summands, not of the sum
    assert np.all(np.abs(full - X @ P) <= 1e-9 * (np.abs(X) @ np.abs(P)))


def test_pi_entries_have_unit_row_variance():
    est, _ = sketched(n=10, d=2000, c_m=0.5)
    var = est.Pi.var() * est.m
    assert var == pytest.approx(1.0, rel=0.02)


def test_update_with_old_value_is_noop():
    est, C = sketched(seed=1)
    before = est.sketches.copy()
    est.update(4, C[4])
    assert est.sketches.tobytes() == before.tobytes()


def test_update_then_query_new_point_is_zero():
    est, _ = sketched(seed=2)
    c = np.full(est.d, 0.7)
    est.update(6, c)
    assert est.query(c)[6] == 0.0


def test_update_matches_rebuild(rng):
    est, C = sketched(seed=5, rng=rng)
    new = rng.normal(size=est.d)
    est.update(2, new)
    C2 = C.copy()
    C2[2] = new
    fresh = DistanceEstimator(C2, 0.1, 0.1, seed=5, c_m=0.25)
    q = rng.normal(size=est.d)
    assert est.query(q)[2] == pytest.approx(fresh.query(q)[2], rel=1e-12)
    assert est.sketches[2].tobytes() == fresh.sketches[2].tobytes()


def test_update_errors():
    est, _ = sketched()
    with pytest.raises(InputError):
        est.update(10, np.zeros(est.d))
    with pytest.raises(InputError):
        est.update(-1, np.zeros(est.d))
    with pytest.raises(InputError):
        est.update(0, np.zeros(est.d + 1))


def test_query_dimension_mismatch():
    est, _ = sketched()
    with pytest.raises(InputError):
        est.query(np.zeros(3))


def test_query_stored_point_exact_zero():
    est, C = sketched(seed=9)
    assert est.query(C[3])[3] == 0.0


def test_query_within_accuracy_identity_regime(rng):
    # the stated parameters give m >= d, so the answers are exact
    C = rng.normal(size=(200, 128))
    Q = rng.normal(size=(20, 128))
    est = DistanceEstimator(C, 0.1, 0.01, seed=11)
    rel = np.abs(est.query_batch(Q) / exact_dists(Q, C) - 1)
    assert rel.max() <= 0.1


def test_query_within_accuracy_real_projection(rng):
    C = rng.normal(size=(200, 4096))
    Q = rng.normal(size=(50, 4096))
    est = DistanceEstimator(C, 0.1, 0.01, seed=12, c_m=2.0)
    assert not est.identity and est.m < 4096
    rel = np.abs(est.query_batch(Q) / exact_dists(Q, C) - 1)
    assert rel.max() <= 0.1


def test_scaling_is_homogeneous(rng):
    est, C = sketched(seed=13, rng=rng)
    q = rng.normal(size=est.d)
    s = 3.7
    scaled = DistanceEstimator(C * s, 0.1, 0.1, seed=13, c_m=0.25)
    assert np.allclose(scaled.query(q * s), s * est.query(q), rtol=1e-9)


def test_query_min_stored_point():
    C = np.zeros((8, 300))
    for i in range(8):
        C[i, i] = 1e3 * (i + 1)
    C[5] = 0.5
    est = DistanceEstimator(C, 0.1, 0.1, seed=0, c_m=0.25)
    assert not est.identity
    assert est.query_min(C[5], 2) == (5, 0.0)


def test_query_min_well_separated_matches_exact(rng):
    d = 600
    C = rng.normal(size=(50, d)) * 100
    est = DistanceEstimator(C, 0.1, 0.1, seed=1, c_m=0.5)
    assert not est.identity
    Q = C[rng.integers(0, 50, size=200)] + rng.normal(size=(200, d))
    idx, _ = est.query_min_batch(Q, 2)
    assert np.array_equal(idx, exact_dists(Q, C).argmin(axis=1))


def test_query_min_z1_equals_min_of_query(rng):
    est, _ = sketched(seed=14, rng=rng)
    for _ in range(10):
        q = rng.normal(size=est.d)
        j, v = est.query_min(q, 1)
        dists = est.query(q)
        assert v == dists.min()
        assert j == int(np.argmin(dists))


def test_space_within_twice_formula():
    est, _ = sketched(n=50, d=400)
    bound = 8 * est.m * (est.n + est.d + 1)
    assert est.nbytes <= 2 * bound


def test_results_independent_of_thread_count(monkeypatch, rng):
    C = rng.normal(size=(300, 500))
    Q = rng.normal(size=(5000, 500))
    out = []
    for threads in ("1", "4"):
        monkeypatch.setenv("CORESET_THREADS", threads)
        est = DistanceEstimator(C, 0.1, 0.1, seed=2, c_m=0.5)
        idx, val = est.query_min_batch(Q, 2)
        out.append((idx.tobytes(), val.tobytes(), est.query_batch(Q[:100]).tobytes()))
    assert out[0] == out[1]
