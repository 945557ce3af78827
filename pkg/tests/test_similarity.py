"""Cosine kernels, softmax, and deterministic top-k selection."""

import math

import numpy as np
import pytest

from alpe.errors import ValidationError
from alpe.similarity import (
    cosine,
    sim_matrix,
    softmax_probs,
    top_k_by_weight,
    top_k_neighbors,
)


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


def test_cosine_matches_scalar_sum():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(2, 17))
        u, v = unit_rows(rng, 2, d)
        expect = math.fsum(float(u[j]) * float(v[j]) for j in range(d))
        assert abs(cosine(u, v) - expect) < 1e-12


def test_cosine_shape_mismatch():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        cosine(np.ones(3), np.ones(4))


def test_sim_matrix_matches_cosine_loop():
    rng = np.random.default_rng(1)
    a = unit_rows(rng, 7, 5)
    b = unit_rows(rng, 4, 5)
    s = sim_matrix(a, b)
    assert s.shape == (7, 4)
    assert s.dtype == np.float64
    for i in range(7):
        for j in range(4):
            assert abs(s[i, j] - cosine(a[i], b[j])) < 1e-12


def test_sim_matrix_column_mismatch():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        sim_matrix(np.ones((2, 3)), np.ones((2, 4)))


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(2)
    sims = rng.uniform(-1, 1, size=(20, 6))
    for tau in (0.5, 1.0, 100.0):
        p = softmax_probs(sims, tau)
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
        assert (p > 0).all()


def test_softmax_manual_two_way():
    # tau * sims = (0, 1): p = (1, e) / (1 + e)
    p = softmax_probs(np.array([0.0, 1.0]), 1.0)
    e = math.e
    np.testing.assert_allclose(p, [1 / (1 + e), e / (1 + e)], atol=1e-15)


def test_softmax_shift_invariant():
    rng = np.random.default_rng(3)
    sims = rng.uniform(-1, 1, size=(5, 4))
    p1 = softmax_probs(sims, 7.0)
    p2 = softmax_probs(sims + 0.37, 7.0)
    np.testing.assert_allclose(p1, p2, atol=1e-12)


def test_softmax_single_row_matches_batch():
    rng = np.random.default_rng(4)
    sims = rng.uniform(-1, 1, size=(6, 5))
    batch = softmax_probs(sims, 3.0)
    for i in range(6):
        np.testing.assert_allclose(softmax_probs(sims[i], 3.0), batch[i], atol=1e-15)


def test_softmax_rejects_bad_tau():
    for tau in (0.0, -1.0):
        with pytest.raises(ValidationError, match="tau"):
            softmax_probs(np.ones(3), tau)


def test_top_k_by_weight_orders_descending():
    cands = np.array([10, 11, 12, 13])
    weights = np.array([0.2, 0.9, 0.5, 0.7])
    np.testing.assert_array_equal(top_k_by_weight(cands, weights, 3), [11, 13, 12])


def test_top_k_by_weight_tie_breaks_low_index():
    cands = np.array([5, 2, 9])
    weights = np.array([0.5, 0.5, 0.5])
    np.testing.assert_array_equal(top_k_by_weight(cands, weights, 2), [2, 5])


def test_top_k_by_weight_short_pool_returns_all():
    cands = np.array([3, 1])
    weights = np.array([0.1, 0.8])
    np.testing.assert_array_equal(top_k_by_weight(cands, weights, 10), [1, 3])


def test_top_k_by_weight_empty_pool():
    out = top_k_by_weight(np.empty(0, dtype=np.int64), np.empty(0), 3)
    assert out.size == 0


def test_top_k_by_weight_rejects_bad_inputs():
    with pytest.raises(ValidationError, match="k must be"):
        top_k_by_weight(np.array([1]), np.array([0.5]), 0)
    with pytest.raises(ValidationError, match="differ"):
        top_k_by_weight(np.array([1, 2]), np.array([0.5]), 1)
    with pytest.raises(ValidationError, match="finite"):
        top_k_by_weight(np.array([1, 2]), np.array([0.5, np.nan]), 1)


def test_top_k_neighbors_matches_brute_force():
    rng = np.random.default_rng(5)
    for trial in range(20):
        n = int(rng.integers(3, 12))
        pool = unit_rows(rng, n, 6)
        q = unit_rows(rng, 1, 6)[0]
        k = int(rng.integers(1, n))
        excl = {int(rng.integers(0, n))}
        got = top_k_neighbors(q, pool, k, exclude=excl)
        sims = pool.astype(np.float64) @ q.astype(np.float64)
        ranked = sorted(
            (j for j in range(n) if j not in excl), key=lambda j: (-sims[j], j)
        )
        np.testing.assert_array_equal(got, ranked[:k])


def test_top_k_neighbors_tie_breaks_low_index():
    pool = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], dtype=np.float32)
    q = np.array([1.0, 0.0], dtype=np.float32)
    np.testing.assert_array_equal(top_k_neighbors(q, pool, 2), [0, 2])


def test_top_k_neighbors_empty_after_exclusion():
    pool = np.eye(2, dtype=np.float32)
    with pytest.raises(ValidationError, match="pool is empty"):
        top_k_neighbors(pool[0], pool, 1, exclude={0, 1})


def test_top_k_neighbors_rejects_bad_k():
    pool = np.eye(2, dtype=np.float32)
    with pytest.raises(ValidationError, match="k must be"):
        top_k_neighbors(pool[0], pool, 0)
