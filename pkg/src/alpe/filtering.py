"""Prototype-based clean/noisy scoring.

Each sample gets an in-class compactness score phi (cosine to its assigned
class's visual prototype) and a cross-class separation score psi (mean cosine
to a small comparison set drawn from other classes in the memory bank). A
pseudo-label is kept as clean iff phi > psi, strictly.

Three comparison-set strategies are supported:

    cs  highest-weight bank records whose working label differs
    rs  uniform random such records, keyed per (seed, epoch, sample)
    fs  highest-weight records carrying the sample's runner-up class

Candidate exclusion uses the bank's working labels; the sample's own record
is never a candidate. An empty comparison set scores psi = -1 (the cosine
infimum), which marks the sample clean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bank import MemoryBank, PrototypeSet
from .errors import ValidationError
from .labeling import PseudoLabels
from .seeding import STREAM_CROSS_SET, stream

STRATEGIES = ("cs", "rs", "fs")

EMPTY_SET_PSI = -1.0


@dataclass
class FilterScores:
    """Per-sample filtering outputs."""

    phi: np.ndarray  # (N,) float64
    psi: np.ndarray  # (N,) float64
    clean: np.ndarray  # (N,) bool
    cross_sets: list[np.ndarray]  # per sample, <= k bank indices


def in_class_score(f: np.ndarray, protos: PrototypeSet, y_hat: int) -> float:
    """Cosine between a feature and its assigned class prototype."""
    if not 0 <= y_hat < protos.mu.shape[0]:
        raise ValidationError(f"class index {y_hat} outside [0, {protos.mu.shape[0]})")
    return float(np.dot(np.asarray(f, dtype=np.float64), protos.mu[y_hat]))


def _top_k_candidates(bank: MemoryBank, mask: np.ndarray, k: int) -> np.ndarray:
    cands = np.where(mask)[0]
    if cands.size == 0:
        return cands
    order = np.lexsort((cands, -bank.weights[cands]))
    return cands[order[: min(k, cands.size)]]


def build_cross_set_cs(bank: MemoryBank, i: int, k: int) -> np.ndarray:
    """Top-k highest-weight records with a different working label."""
    mask = bank.labels != bank.labels[i]
    mask[i] = False
    return _top_k_candidates(bank, mask, k)


def build_cross_set_rs(
    bank: MemoryBank, i: int, k: int, seed: int, epoch: int = 0
) -> np.ndarray:
    """k records with a different working label, sampled uniformly.

    The draw is keyed by (seed, epoch, i), so results do not depend on
    evaluation order. Returned in draw order.
    """
    mask = bank.labels != bank.labels[i]
    mask[i] = False
    cands = np.where(mask)[0]
    if cands.size <= k:
        return cands
    rng = stream(seed, STREAM_CROSS_SET, epoch, i)
    sel = rng.choice(cands.size, size=k, replace=False)
    return cands[sel]


def build_cross_set_fs(bank: MemoryBank, i: int, k: int, y_second: int) -> np.ndarray:
    """Top-k highest-weight records whose working label is the runner-up class."""
    mask = bank.labels == y_second
    mask[i] = False
    return _top_k_candidates(bank, mask, k)


def cross_class_separation(f: np.ndarray, cross_set: np.ndarray, bank: MemoryBank) -> float:
    """Mean cosine between ``f`` and the comparison-set features.

    An empty set returns the sentinel -1 (maximally separated).
    """
    cross_set = np.asarray(cross_set, dtype=np.int64)
    if cross_set.size == 0:
        return EMPTY_SET_PSI
    members = bank.features[cross_set].astype(np.float64, copy=False)
    return float(np.mean(members @ np.asarray(f, dtype=np.float64)))


def clean_mask(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Strict elementwise phi > psi."""
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    if phi.shape != psi.shape:
        raise ValidationError(f"phi {phi.shape} and psi {psi.shape} shapes differ")
    return phi > psi


def threshold_filter(probs: np.ndarray, threshold: float) -> np.ndarray:
    """Fixed-confidence baseline: keep rows whose max probability >= threshold."""
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must be in (0, 1), got {threshold}")
    return np.asarray(probs).max(axis=-1) >= threshold


def score_samples(
    bank: MemoryBank,
    protos: PrototypeSet,
    labels: PseudoLabels,
    strategy: str,
    k: int,
    seed: int = 0,
    epoch: int = 0,
) -> FilterScores:
    """Score every sample: phi against its current pseudo-label's prototype,
    psi against the strategy's comparison set, clean = phi > psi."""
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    n = len(bank)
    feats = bank.features.astype(np.float64, copy=False)
    phi = np.einsum("ij,ij->i", feats, protos.mu[labels.y_hat])

    cross_sets: list[np.ndarray] = []
    if strategy == "cs":
        # The candidate ranking only depends on the excluded label, so the
        # top-k list can be shared across samples with the same working label.
        per_label: dict[int, np.ndarray] = {}
        for lbl in np.unique(bank.labels):
            mask = bank.labels != lbl
            per_label[int(lbl)] = _top_k_candidates(bank, mask, k)
        for i in range(n):
            cross_sets.append(per_label[int(bank.labels[i])])
    elif strategy == "rs":
        for i in range(n):
            cross_sets.append(build_cross_set_rs(bank, i, k, seed, epoch))
    else:
        # Per-class members pre-sorted by descending weight; drop self if present.
        order_by_class: dict[int, np.ndarray] = {}
        for lbl in np.unique(bank.labels):
            mask = bank.labels == lbl
            order_by_class[int(lbl)] = _top_k_candidates(bank, mask, n)
        empty = np.empty(0, dtype=np.int64)
        for i in range(n):
            members = order_by_class.get(int(labels.y_second[i]), empty)
            if members.size and (members[: k + 1] == i).any():
                members = members[members != i]
            cross_sets.append(members[:k])

    psi = np.empty(n, dtype=np.float64)
    for i in range(n):
        cs = cross_sets[i]
        if cs.size == 0:
            psi[i] = EMPTY_SET_PSI
        else:
            psi[i] = float(np.mean(feats[cs] @ feats[i]))
    return FilterScores(phi=phi, psi=psi, clean=phi > psi, cross_sets=cross_sets)
