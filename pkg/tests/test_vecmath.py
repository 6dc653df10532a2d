import numpy as np
import pytest

from beamdiar.vecmath import (
    RAW_CLAMP_EPS,
    centroid_add,
    cosine_distance,
    distances_to,
    paired_distances,
    pairwise_distances,
    raw_cosine_distance,
)


def test_identity_distance_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.normal(size=8)
        assert cosine_distance(v, v) == pytest.approx(0.0, abs=1e-15)


def test_antipodal_distance_one():
    assert cosine_distance(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == 1.0


def test_orthogonal_distance_half():
    assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.5


def test_scale_invariance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.normal(size=6)
        b = rng.normal(size=6)
        s, t = rng.uniform(0.01, 100.0, size=2)
        assert cosine_distance(a, b) == pytest.approx(cosine_distance(s * a, t * b), abs=1e-12)


def test_distance_bounds():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        assert 0.0 <= cosine_distance(a, b) <= 1.0


def test_zero_vector_rejected():
    with pytest.raises(ValueError, match="degenerate vector"):
        cosine_distance(np.zeros(3), np.ones(3))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError, match="dimension mismatch"):
        cosine_distance(np.ones(3), np.ones(4))


def test_raw_distance_clamped():
    a = np.array([1.0, 0.0])
    assert raw_cosine_distance(a, a) == RAW_CLAMP_EPS
    assert raw_cosine_distance(a, -a) == 1.0 - RAW_CLAMP_EPS
    assert raw_cosine_distance(a, np.array([0.0, 1.0])) == 1.0 - RAW_CLAMP_EPS
    assert raw_cosine_distance(a, np.array([1.0, 1.0])) == pytest.approx(1.0 - 2**-0.5)


def test_distances_to_matches_scalar_calls():
    rng = np.random.default_rng(3)
    e = rng.normal(size=5)
    centers = rng.normal(size=(7, 5))
    batch = distances_to(e, centers)
    for j in range(7):
        assert batch[j] == pytest.approx(cosine_distance(e, centers[j]), abs=1e-12)


def test_paired_and_pairwise_match_scalar_calls():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(6, 4))
    y = rng.normal(size=(6, 4))
    paired = paired_distances(x, y)
    full = pairwise_distances(x)
    for i in range(6):
        assert paired[i] == pytest.approx(cosine_distance(x[i], y[i]), abs=1e-12)
        for j in range(6):
            if i != j:
                assert full[i, j] == pytest.approx(cosine_distance(x[i], x[j]), abs=1e-12)
    assert np.all(full.diagonal() == 0.0)


def test_centroid_first_member():
    center, count = centroid_add(np.zeros(2), 0, np.array([1.0, 0.0]))
    assert count == 1
    assert np.array_equal(center, np.array([1.0, 0.0]))


def test_centroid_two_member_mean():
    center, count = centroid_add(np.array([1.0, 0.0]), 1, np.array([0.0, 1.0]))
    assert count == 2
    assert np.array_equal(center, np.array([0.5, 0.5]))


def test_centroid_matches_batch_mean_small():
    rng = np.random.default_rng(5)
    vecs = rng.normal(size=(5, 3))
    vecs /= np.linalg.norm(vecs, axis=1)[:, None]
    center, count = np.zeros(3), 0
    for v in vecs:
        center, count = centroid_add(center, count, v)
    assert count == 5
    np.testing.assert_allclose(center, vecs.mean(axis=0), atol=1e-12)


def test_centroid_matches_batch_mean_long():
    rng = np.random.default_rng(6)
    vecs = rng.normal(size=(10_000, 4))
    center, count = np.zeros(4), 0
    for v in vecs:
        center, count = centroid_add(center, count, v)
    np.testing.assert_allclose(center, vecs.mean(axis=0), atol=1e-10)


def test_centroid_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        centroid_add(np.zeros(2), 1, np.zeros(3))
