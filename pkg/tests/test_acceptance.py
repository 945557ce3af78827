"""Package acceptance gates.

One test per gate, so a verbose pytest run reports one pass/fail line for
each: analytic gradients against refined central differences, vectorized
engine against the brute-force oracle, filter quality with frozen
regression margins, end-to-end training improvement inside a time budget,
closed-form spot values, byte-level determinism of training artifacts, and
the documented scale limits of the suite.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from alpe.bank import compute_prototypes, init_bank
from alpe.bundle import normalize_rows, save_bundle
from alpe.filtering import score_samples, threshold_filter
from alpe.labeling import zero_shot_label
from alpe.oracle import oracle_pipeline
from alpe.refinement import refine_noisy, sigmoid
from alpe.synth import benchmark_spec, generate, oracle_spec
from alpe.training import (
    LabelState,
    TrainConfig,
    grad_total,
    loss_reg,
    run_training,
    total_loss_and_grad,
)

STRATEGIES = ("cs", "rs", "fs")

# Measured once on the default benchmark (seed 42) and frozen; the suite
# fails if behavior drifts from these regression constants.
FROZEN_ZERO_SHOT_TEST = 0.656
FROZEN_THRESHOLD_KEEP = 39
FROZEN_EPOCH1_CLEAN = {"cs": 1998, "rs": 1973, "fs": 1641}
FROZEN_FINAL_TEST = {"cs": 0.798, "rs": 0.798, "fs": 0.800}
FROZEN_MIN_MARGIN = {"cs": 0.0, "rs": 0.0020521565, "fs": 0.0221716341}


@pytest.fixture(scope="module")
def bench_bundle():
    return generate(benchmark_spec())


@pytest.fixture(scope="module")
def bench_runs(bench_bundle):
    runs = {}
    for strategy in STRATEGIES:
        start = time.perf_counter()
        result = run_training(bench_bundle, TrainConfig(strategy=strategy))
        runs[strategy] = (result, time.perf_counter() - start)
    return runs


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


def random_instance(seed, b=32, c=5, d=16):
    rng = np.random.default_rng(seed)
    strong = unit_rows(rng, b, d)
    z = (1.0 + 0.5 * rng.uniform(size=(c, 1))) * unit_rows(rng, c, d).astype(np.float64)
    clean = rng.uniform(size=b) < 0.6
    clean[0] = True
    clean[1] = False
    state = LabelState(
        y_hat=rng.integers(0, c, size=b).astype(np.int64),
        y_second=rng.integers(0, c, size=b).astype(np.int64),
        omega=rng.uniform(0.3, 0.9, size=b),
        phi=np.zeros(b),
        psi=np.zeros(b),
        clean=clean,
        r_hat=np.where(clean, -1, rng.integers(0, 7, size=b)).astype(np.int64),
        y_h=np.where(clean, -1, rng.integers(0, c, size=b)).astype(np.int64),
        lam=np.where(clean, np.nan, rng.uniform(0.2, 0.8, size=b)),
        delta_zeta=np.where(clean, np.nan, 0.0),
        neighbors=[None] * b,
    )
    return strong, z, state


def central_diff(fn, z, h):
    g = np.zeros_like(z)
    for idx in np.ndindex(*z.shape):
        zp = z.copy()
        zp[idx] += h
        zm = z.copy()
        zm[idx] -= h
        g[idx] = (fn(zp) - fn(zm)) / (2.0 * h)
    return g


def refined_central_diff(fn, z, h):
    # Fourth-order combination of two central differences; h is the largest
    # step used. The plain h difference alone carries O((tau s h)^2) curvature
    # error, about 1e-3 relative at tau=100, which would swamp the comparison.
    return (4.0 * central_diff(fn, z, h / 2.0) - central_diff(fn, z, h)) / 3.0


def test_gradient_matches_central_differences():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(5):
        strong, z, state = random_instance(seed)
        for tau in (1.0, 100.0):

            def total(zm, _tau=tau):
                (a, b, r), _ = total_loss_and_grad(strong, zm, state, _tau)
                return a + b + r

            grad = grad_total(strong, z, state, tau)
            fd = refined_central_diff(total, z, 1e-3)
            mask = np.abs(grad) > 1e-8
            assert mask.any()
            rel = np.abs(grad - fd)[mask] / np.abs(grad)[mask]
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    assert worst < 1e-4, worst
    assert elapsed < 10.0, elapsed
    print(f"gradient check: max rel err {worst:.3e} in {elapsed:.2f}s")


def test_engine_matches_bruteforce_oracle():
    bundle = generate(oracle_spec())
    assert bundle.num_samples <= 512
    z_unit = normalize_rows(bundle.catalog.Z.astype(np.float64))
    for strategy in STRATEGIES:
        labels = zero_shot_label(bundle.weak, z_unit, 100.0)
        bank = init_bank(bundle.weak, labels.y_hat, labels.omega, bundle.num_classes)
        protos = compute_prototypes(bank, z_unit)
        scores = score_samples(bank, protos, labels, strategy, 3, seed=0, epoch=1)
        state = LabelState.from_parts(labels, scores)
        refine_noisy(state, bundle.weak, bundle.text_desc, bundle.catalog.owner, 3)

        ref = oracle_pipeline(bundle, strategy)
        np.testing.assert_array_equal(state.y_hat, ref["y_hat"], err_msg=strategy)
        np.testing.assert_array_equal(state.y_second, ref["y_second"], err_msg=strategy)
        np.testing.assert_array_equal(state.clean, ref["clean"], err_msg=strategy)
        np.testing.assert_allclose(state.omega, ref["omega"], atol=1e-5)
        np.testing.assert_allclose(state.phi, ref["phi"], atol=1e-5)
        np.testing.assert_allclose(state.psi, ref["psi"], atol=1e-5)
        np.testing.assert_array_equal(state.y_h, ref["y_h"], err_msg=strategy)
        np.testing.assert_array_equal(state.r_hat, ref["r_hat"], err_msg=strategy)
        np.testing.assert_allclose(
            state.delta_zeta, ref["delta_zeta"], atol=1e-5, equal_nan=True
        )
        np.testing.assert_allclose(state.lam, ref["lam"], atol=1e-5, equal_nan=True)
        for i in range(bundle.num_samples):
            np.testing.assert_array_equal(scores.cross_sets[i], ref["cross_sets"][i])
            if state.neighbors[i] is None:
                assert ref["neighbors"][i] is None
            else:
                np.testing.assert_array_equal(state.neighbors[i], ref["neighbors"][i])


def test_clean_filter_quality_and_frozen_margins(bench_bundle, bench_runs):
    z = normalize_rows(bench_bundle.catalog.Z)
    labels = zero_shot_label(bench_bundle.weak, z, 100.0)
    kept = int(threshold_filter(labels.probs, 0.95).sum())
    assert kept == FROZEN_THRESHOLD_KEEP

    for strategy in STRATEGIES:
        result, _ = bench_runs[strategy]
        margins = [m.clean_acc - m.pseudo_acc for m in result.metrics]
        # the clean subset is never less accurate than the full pseudo-labels
        assert all(x >= -1e-12 for x in margins), (strategy, margins)
        assert abs(min(margins) - FROZEN_MIN_MARGIN[strategy]) < 1e-6
        assert result.metrics[0].clean_count == FROZEN_EPOCH1_CLEAN[strategy]
        assert result.metrics[0].clean_count >= kept
        print(
            f"{strategy}: epoch-1 clean {result.metrics[0].clean_count} "
            f"(threshold baseline {kept}), min margin {min(margins):.6f}"
        )


def test_training_improves_over_zero_shot_within_budget(bench_runs):
    for strategy in STRATEGIES:
        result, elapsed = bench_runs[strategy]
        zs = result.zero_shot_test_acc
        final = result.metrics[-1].test_acc
        assert final > zs, (strategy, zs, final)
        assert abs(zs - FROZEN_ZERO_SHOT_TEST) < 1e-9
        assert abs(final - FROZEN_FINAL_TEST[strategy]) < 1e-6
        assert elapsed < 60.0, (strategy, elapsed)
        print(f"{strategy}: test acc {zs:.3f} -> {final:.3f} in {elapsed:.1f}s")


def test_closed_form_spot_values():
    # balanced batch: one-hot rows on identity prototypes give uniform mean
    # predictions, so the balance loss is exactly log C
    for c, tau in ((10, 100.0), (10, 1.0), (4, 7.0)):
        strong = np.eye(c, dtype=np.float32)
        z = np.eye(c, dtype=np.float32)
        assert abs(loss_reg(strong, z, tau) - math.log(c)) < 1e-9
    assert abs(loss_reg(np.eye(10, dtype=np.float32), np.eye(10, dtype=np.float32), 100.0) - 2.302585093) < 1e-9

    assert sigmoid(0.0) == 0.5
    assert abs(sigmoid(1.0) - 0.731058579) < 1e-9

    # a sample with no cross-class candidates is maximally separated
    rng = np.random.default_rng(0)
    feats = unit_rows(rng, 6, 4)
    z = unit_rows(rng, 2, 4)
    labels = zero_shot_label(feats, z, 100.0)
    bank = init_bank(feats, np.zeros(6, dtype=np.int64), np.full(6, 0.5), 2)
    protos = compute_prototypes(bank, z)
    scores = score_samples(bank, protos, labels, "cs", 3)
    assert all(cs.size == 0 for cs in scores.cross_sets)
    assert (scores.psi == -1.0).all()
    assert scores.clean.all()


def test_identical_configs_give_identical_metrics_bytes(tmp_path):
    bundle_dir = tmp_path / "bundle"
    save_bundle(generate(oracle_spec()), bundle_dir)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = subprocess.run(
            [
                sys.executable, "-m", "alpe.cli", "train",
                "--bundle", str(bundle_dir), "--strategy", "rs",
                "--epochs", "3", "--seed", "9", "--out", str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    a, b = outs
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    assert (a / "z_final.f32").read_bytes() == (b / "z_final.f32").read_bytes()
    assert json.loads((a / "run.json").read_text()) == json.loads((b / "run.json").read_text())


def test_full_scale_results_out_of_scope():
    """Published full-dataset accuracies depend on a tuned image encoder and
    fresh per-epoch augmentations, neither of which this repository ships.
    The synthetic-bundle gates above stand in for them; this test records
    that substitution so the omission is deliberate, not accidental."""
    gates = [n for n in globals() if n.startswith("test_")]
    assert len(gates) == 7
