"""Synthetic benchmark generation: determinism, geometry, and degradation."""

import numpy as np
import pytest

from alpe.errors import ValidationError
from alpe.labeling import evaluate_accuracy
from alpe.synth import SynthSpec, benchmark_spec, generate, noise_sweep, oracle_spec


def test_generate_is_deterministic():
    spec = oracle_spec(seed=5)
    a = generate(spec)
    b = generate(spec)
    for name in ("weak", "strong", "test", "text_desc"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    np.testing.assert_array_equal(a.truth_train, b.truth_train)
    np.testing.assert_array_equal(a.catalog.owner, b.catalog.owner)
    assert a.catalog.Z.tobytes() == b.catalog.Z.tobytes()


def test_generate_seed_changes_data():
    a = generate(oracle_spec(seed=5))
    b = generate(oracle_spec(seed=6))
    assert a.weak.tobytes() != b.weak.tobytes()


def test_generate_shapes_and_validation():
    spec = oracle_spec()
    b = generate(spec)
    b.validate()
    n = spec.num_classes * spec.per_class
    assert b.weak.shape == (n, spec.dim)
    assert b.strong.shape == (n, spec.dim)
    assert b.test.shape == (spec.num_classes * spec.test_per_class, spec.dim)
    assert b.text_desc.shape == (spec.num_classes * spec.descriptions_per_class, spec.dim)
    assert b.catalog.Z.shape == (spec.num_classes, spec.dim)
    counts = np.bincount(b.truth_train, minlength=spec.num_classes)
    np.testing.assert_array_equal(counts, np.full(spec.num_classes, spec.per_class))


def test_zero_noise_puts_samples_on_centers():
    spec = SynthSpec(
        num_classes=4,
        dim=16,
        per_class=10,
        test_per_class=5,
        descriptions_per_class=2,
        within_noise=0.0,
        strong_jitter=0.0,
        desc_noise=0.0,
        mislabel_rate=0.0,
        seed=1,
    )
    b = generate(spec)
    # all views collapse onto the class centers, so labeling is perfect
    assert evaluate_accuracy(b.weak, b.catalog.Z, b.truth_train) == 1.0
    assert evaluate_accuracy(b.test, b.catalog.Z, b.truth_test) == 1.0
    np.testing.assert_allclose(b.strong, b.weak, atol=1e-6)
    for c in range(4):
        rows = b.weak[b.truth_train == c]
        assert np.ptp(rows, axis=0).max() == 0.0
        np.testing.assert_allclose(
            b.catalog.Z[c], rows[0], atol=1e-6
        )


def test_mislabeled_descriptions_point_at_hub_class():
    spec = SynthSpec(
        num_classes=4,
        dim=16,
        per_class=40,
        test_per_class=5,
        descriptions_per_class=3,
        within_noise=0.05,
        desc_noise=0.05,
        mislabel_rate=0.999,
        seed=7,
    )
    b = generate(spec)
    m = spec.descriptions_per_class
    # proxy class centers from the barely noisy weak features
    proxies = np.stack(
        [b.weak[b.truth_train == c].mean(axis=0) for c in range(4)]
    )
    proxies /= np.linalg.norm(proxies, axis=1, keepdims=True)
    nearest = np.argmax(b.text_desc.astype(np.float64) @ proxies.T, axis=1)
    # the first description of each class always stays on-target
    np.testing.assert_array_equal(nearest[::m], np.arange(4))
    # nearly all remaining descriptions of classes 1..3 resemble the hub
    strays = np.concatenate(
        [nearest[c * m + 1 : (c + 1) * m] for c in range(1, 4)]
    )
    assert np.mean(strays == 0) >= 0.5


def test_mislabel_rate_degrades_zero_shot_accuracy():
    clean = generate(SynthSpec(seed=3, mislabel_rate=0.0))
    dirty = generate(SynthSpec(seed=3, mislabel_rate=0.9))
    acc_clean = evaluate_accuracy(clean.test, clean.catalog.Z, clean.truth_test)
    acc_dirty = evaluate_accuracy(dirty.test, dirty.catalog.Z, dirty.truth_test)
    assert acc_dirty < acc_clean


def test_spec_validation():
    with pytest.raises(ValidationError, match="infeasible separation"):
        SynthSpec(num_classes=10, dim=10)
    for kwargs in (
        dict(num_classes=1),
        dict(per_class=0),
        dict(test_per_class=-1),
        dict(descriptions_per_class=0),
        dict(within_noise=-0.1),
        dict(mislabel_rate=1.5),
        dict(center_separation=0.0),
        dict(seed=-1),
    ):
        with pytest.raises(ValidationError):
            SynthSpec(**kwargs)


def test_noise_sweep_degrades_monotonically():
    specs = noise_sweep(oracle_spec(), [0.1, 0.3, 0.5, 0.7])
    accs = []
    for spec in specs:
        b = generate(spec)
        accs.append(evaluate_accuracy(b.test, b.catalog.Z, b.truth_test))
    for lo, hi in zip(accs[1:], accs[:-1]):
        assert lo <= hi, accs
    assert accs[0] - accs[-1] > 0.2, accs


def test_benchmark_spec_matches_frozen_constants():
    b = generate(benchmark_spec())
    assert b.num_samples == 2000
    assert b.num_classes == 10
    zs_train = evaluate_accuracy(b.weak, b.catalog.Z, b.truth_train)
    zs_test = evaluate_accuracy(b.test, b.catalog.Z, b.truth_test)
    assert abs(zs_train - 0.66) < 1e-12
    assert abs(zs_test - 0.656) < 1e-12
