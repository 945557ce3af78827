"""Memory bank records, prototype computation, and the epoch update."""

from types import SimpleNamespace

import numpy as np
import pytest

from alpe.bank import (
    compute_prototypes,
    init_bank,
    load_bank,
    save_bank,
    update_bank,
)
from alpe.errors import ValidationError


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


def small_bank(rng, n=10, d=4, c=3):
    feats = unit_rows(rng, n, d)
    labels = rng.integers(0, c, size=n)
    weights = rng.uniform(0.1, 1.0, size=n)
    return init_bank(feats, labels, weights, c)


def test_init_bank_keeps_arrays():
    rng = np.random.default_rng(0)
    bank = small_bank(rng)
    assert len(bank) == 10
    assert bank.labels.dtype == np.int64
    assert bank.weights.dtype == np.float64


def test_init_bank_rejects_shape_mismatch():
    feats = np.eye(3, dtype=np.float32)
    with pytest.raises(ValidationError, match="disagree"):
        init_bank(feats, np.array([0, 1]), np.array([0.5, 0.5, 0.5]), 2)


def test_init_bank_rejects_nonpositive_weight():
    feats = np.eye(3, dtype=np.float32)
    labels = np.array([0, 1, 0])
    with pytest.raises(ValidationError, match="index 1"):
        init_bank(feats, labels, np.array([0.5, 0.0, 0.5]), 2)
    with pytest.raises(ValidationError, match="index 2"):
        init_bank(feats, labels, np.array([0.5, 0.5, np.nan]), 2)


def test_init_bank_rejects_label_range():
    feats = np.eye(3, dtype=np.float32)
    with pytest.raises(ValidationError, match="labels outside"):
        init_bank(feats, np.array([0, 1, 5]), np.full(3, 0.5), 2)


def test_prototypes_weighted_mean():
    feats = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]], dtype=np.float32)
    bank = init_bank(feats, np.array([0, 0, 1]), np.array([3.0, 1.0, 1.0]), 2)
    protos = compute_prototypes(bank, np.eye(2, dtype=np.float32))
    # class 0: (3*[1,0] + 1*[0,1]) / 4 = [0.75, 0.25], normalized
    expect = np.array([0.75, 0.25]) / np.hypot(0.75, 0.25)
    np.testing.assert_allclose(protos.mu[0], expect, atol=1e-12)
    np.testing.assert_allclose(protos.mu[1], [0.0, 1.0], atol=1e-12)
    np.testing.assert_array_equal(protos.support, [2, 1])


def test_prototypes_weight_scale_invariant():
    rng = np.random.default_rng(1)
    feats = unit_rows(rng, 12, 5)
    labels = rng.integers(0, 3, size=12)
    weights = rng.uniform(0.1, 1.0, size=12)
    z = unit_rows(rng, 3, 5)
    a = compute_prototypes(init_bank(feats, labels, weights, 3), z)
    b = compute_prototypes(init_bank(feats, labels, weights * 10.0, 3), z)
    np.testing.assert_allclose(a.mu, b.mu, atol=1e-12)


def test_prototypes_empty_class_uses_fallback():
    feats = np.array([[1.0, 0.0]], dtype=np.float32)
    bank = init_bank(feats, np.array([0]), np.array([1.0]), 2)
    z = np.array([[0.0, 1.0], [0.6, 0.8]], dtype=np.float32)
    protos = compute_prototypes(bank, z)
    np.testing.assert_allclose(protos.mu[1], [0.6, 0.8], atol=1e-7)
    np.testing.assert_array_equal(protos.support, [1, 0])


def test_prototypes_rejects_empty_bank():
    bank = init_bank(np.empty((0, 2), dtype=np.float32), np.empty(0), np.empty(0), 2)
    with pytest.raises(ValidationError, match="bank is empty"):
        compute_prototypes(bank, np.eye(2, dtype=np.float32))


def test_prototypes_rejects_zero_mean():
    feats = np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32)
    bank = init_bank(feats, np.array([0, 0]), np.array([1.0, 1.0]), 1)
    with pytest.raises(ValidationError, match="mean is zero"):
        compute_prototypes(bank, np.array([[1.0, 0.0]], dtype=np.float32))


def fake_state(clean, y_hat, y_h, omega, lam):
    return SimpleNamespace(
        clean=np.asarray(clean, dtype=bool),
        y_hat=np.asarray(y_hat, dtype=np.int64),
        y_h=np.asarray(y_h, dtype=np.int64),
        omega=np.asarray(omega, dtype=np.float64),
        lam=np.asarray(lam, dtype=np.float64),
    )


def test_update_bank_routes_clean_and_noisy():
    rng = np.random.default_rng(2)
    feats = unit_rows(rng, 4, 3)
    bank = init_bank(feats, np.array([0, 0, 1, 1]), np.full(4, 0.5), 2)
    state = fake_state(
        clean=[True, False, True, False],
        y_hat=[0, 0, 1, 1],
        y_h=[-1, 1, -1, 0],
        omega=[0.9, 0.8, 0.7, 0.6],
        lam=[np.nan, 0.3, np.nan, 0.4],
    )
    new = update_bank(bank, state)
    np.testing.assert_array_equal(new.labels, [0, 1, 1, 0])
    np.testing.assert_allclose(new.weights, [0.9, 0.3, 0.7, 0.4], atol=1e-12)
    assert new.features is bank.features


def test_update_bank_rejects_weight_bounds():
    feats = np.eye(2, dtype=np.float32)
    bank = init_bank(feats, np.array([0, 1]), np.full(2, 0.5), 2)
    state = fake_state([True, False], [0, 1], [-1, 0], [0.9, 0.9], [np.nan, 1.0])
    with pytest.raises(ValidationError, match="adaptive weight"):
        update_bank(bank, state)


def test_update_bank_rejects_label_bounds():
    feats = np.eye(2, dtype=np.float32)
    bank = init_bank(feats, np.array([0, 1]), np.full(2, 0.5), 2)
    state = fake_state([True, False], [0, 1], [-1, 5], [0.9, 0.9], [np.nan, 0.5])
    with pytest.raises(ValidationError, match="labels outside"):
        update_bank(bank, state)


def test_update_bank_rejects_length_mismatch():
    feats = np.eye(2, dtype=np.float32)
    bank = init_bank(feats, np.array([0, 1]), np.full(2, 0.5), 2)
    state = fake_state([True], [0], [-1], [0.9], [np.nan])
    with pytest.raises(ValidationError, match="entries for bank"):
        update_bank(bank, state)


def test_bank_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    bank = small_bank(rng, n=17, d=6, c=4)
    save_bank(bank, tmp_path / "ckpt")
    loaded = load_bank(tmp_path / "ckpt", dim=6)
    assert loaded.features.tobytes() == bank.features.tobytes()
    np.testing.assert_array_equal(loaded.labels, bank.labels)
    np.testing.assert_allclose(loaded.weights, bank.weights, atol=0)
    assert loaded.num_classes == bank.num_classes
