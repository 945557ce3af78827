"""Synthetic embedding benchmark with controllable difficulty.

The geometry mimics how real image-text encoders arrange features: one
shared "this is an image" axis that every vector leans on heavily, plus a
low-dimensional class subspace holding all the discriminative structure.
Class centers sit at angle center_separation * pi/2 off the shared axis,
each toward its own orthonormal subspace direction, so pairwise cosines
stay high (a narrow cone) while class evidence lives in small cosine gaps,
the regime where a temperature of 100 yields spread-out, unsaturated
softmax confidences. Sample noise is drawn inside the class subspace: that
is where real augmentation and instance variation move features, and it is
what lets moderate noise levels create genuine label confusion without
collapsing the cone.

Description vectors sit near their class center except for a mislabeled
fraction drawn near a hub class (class 0) while the ownership table still
claims the original class; real description sets tend to confuse many
classes with one dominant look rather than spreading errors uniformly.

Every purpose (centers, train noise, jitter, test noise, descriptions,
mislabel draws) uses its own counter-based stream, so changing within_noise
moves only the sample noise and leaves the geometry fixed. That is what
makes accuracy-vs-noise sweeps monotone instead of re-rolling the world.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bundle import ClassCatalog, EmbeddingBundle, normalize_rows
from .errors import ValidationError
from .labeling import init_text_prototypes
from .seeding import STREAM_SYNTH, stream

_PURPOSE_CENTERS = 0
_PURPOSE_WEAK = 1
_PURPOSE_STRONG = 2
_PURPOSE_TEST = 3
_PURPOSE_DESC = 4
_PURPOSE_MISLABEL = 5


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int = 10
    dim: int = 64
    per_class: int = 200
    test_per_class: int = 50
    descriptions_per_class: int = 4
    center_separation: float = 0.16
    within_noise: float = 0.10
    strong_jitter: float = 0.15
    desc_noise: float = 0.35
    mislabel_rate: float = 0.5
    seed: int = 42

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValidationError("need at least 2 classes")
        if self.dim < self.num_classes + 1:
            raise ValidationError(
                f"infeasible separation: dim {self.dim} < num_classes + 1 "
                f"({self.num_classes + 1})"
            )
        if self.per_class < 1 or self.descriptions_per_class < 1:
            raise ValidationError("per_class and descriptions_per_class must be >= 1")
        if self.test_per_class < 0:
            raise ValidationError("test_per_class must be >= 0")
        if not 0.0 < self.center_separation <= 1.0:
            raise ValidationError("center_separation must be in (0, 1]")
        for name in ("within_noise", "strong_jitter", "desc_noise"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if not 0.0 <= self.mislabel_rate < 1.0:
            raise ValidationError("mislabel_rate must be in [0, 1)")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")


def _frame(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """(centers, class-subspace basis) from one orthonormal frame."""
    rng = stream(spec.seed, STREAM_SYNTH, _PURPOSE_CENTERS)
    g = rng.standard_normal((spec.dim, spec.num_classes + 1))
    q, r = np.linalg.qr(g)
    q *= np.sign(np.diag(r))[None, :]  # fix QR sign so the frame is unique
    shared = q[:, 0]
    subspace = q[:, 1:]  # (dim, C)
    alpha = spec.center_separation * np.pi / 2.0
    centers = np.cos(alpha) * shared[None, :] + np.sin(alpha) * subspace.T
    return centers, subspace


def _noisy_points(
    centers: np.ndarray,
    subspace: np.ndarray,
    labels: np.ndarray,
    scale: float,
    rng: np.random.Generator,
) -> np.ndarray:
    c = subspace.shape[1]
    coeffs = rng.standard_normal((labels.size, c)) / np.sqrt(c)
    noise = coeffs @ subspace.T  # class-subspace noise, unit expected norm
    return normalize_rows((centers[labels] + scale * noise).astype(np.float32))


def generate(spec: SynthSpec) -> EmbeddingBundle:
    """Build a fully populated bundle (train, test, descriptions, truth)."""
    c, m = spec.num_classes, spec.descriptions_per_class
    d = spec.dim
    centers, subspace = _frame(spec)

    truth_train = np.repeat(np.arange(c, dtype=np.int64), spec.per_class)
    weak = _noisy_points(
        centers,
        subspace,
        truth_train,
        spec.within_noise,
        stream(spec.seed, STREAM_SYNTH, _PURPOSE_WEAK),
    )
    jit = stream(spec.seed, STREAM_SYNTH, _PURPOSE_STRONG).standard_normal((weak.shape[0], c))
    strong = normalize_rows(
        (weak.astype(np.float64) + spec.strong_jitter * (jit / np.sqrt(c)) @ subspace.T).astype(
            np.float32
        )
    )

    test = truth_test = None
    if spec.test_per_class > 0:
        truth_test = np.repeat(np.arange(c, dtype=np.int64), spec.test_per_class)
        test = _noisy_points(
            centers,
            subspace,
            truth_test,
            spec.within_noise,
            stream(spec.seed, STREAM_SYNTH, _PURPOSE_TEST),
        )

    owner = np.repeat(np.arange(c, dtype=np.int64), m)
    mis_rng = stream(spec.seed, STREAM_SYNTH, _PURPOSE_MISLABEL)
    desc_source = owner.copy()
    for i in range(owner.size):
        # keep the first description of each class on-target so every class
        # retains some correct text signal even at high mislabel rates
        if i % m == 0:
            continue
        if mis_rng.random() < spec.mislabel_rate:
            # mismatched descriptions resemble the hub (class 0's own
            # strays point at class 1 instead)
            desc_source[i] = 0 if owner[i] != 0 else 1
    text_desc = _noisy_points(
        centers,
        subspace,
        desc_source,
        spec.desc_noise,
        stream(spec.seed, STREAM_SYNTH, _PURPOSE_DESC),
    )

    class_names = [f"class_{j:02d}" for j in range(c)]
    descriptions = [f"{class_names[j]} description {i % m}" for i, j in enumerate(owner)]
    catalog = ClassCatalog(
        class_names=class_names,
        descriptions=descriptions,
        owner=owner,
        Z=np.zeros((c, d), dtype=np.float32),
    )
    catalog.Z = init_text_prototypes(text_desc, catalog)

    bundle = EmbeddingBundle(
        weak=weak,
        strong=strong,
        text_desc=text_desc,
        catalog=catalog,
        test=test,
        truth_train=truth_train,
        truth_test=truth_test,
        descriptions_per_class=m,
    )
    bundle.validate()
    return bundle


def benchmark_spec(seed: int = 42) -> SynthSpec:
    """Default benchmark: 10 classes, 2000 train / 500 test samples."""
    return SynthSpec(seed=seed)


def oracle_spec(seed: int = 42) -> SynthSpec:
    """Small instance (512 train samples) sized for brute-force checking."""
    return SynthSpec(
        num_classes=8,
        dim=32,
        per_class=64,
        test_per_class=8,
        descriptions_per_class=3,
        seed=seed,
    )


def noise_sweep(base: SynthSpec, noise_values) -> list[SynthSpec]:
    """Same world, varying only within_noise."""
    return [replace(base, within_noise=float(w)) for w in noise_values]
