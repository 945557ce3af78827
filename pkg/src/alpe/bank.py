"""Memory bank: per-sample working labels and weights, plus class prototypes.

The bank stores one record per training sample: its (frozen) weak-view
feature, a working label, and a working weight. Visual class prototypes are
the weight-averaged, re-normalized feature means per working label; classes
with no members fall back to their text prototype row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle import read_blob, write_blob
from .errors import ValidationError


@dataclass
class MemoryBank:
    features: np.ndarray  # (N, d) float32, never mutated
    labels: np.ndarray  # (N,) int64, working labels in [0, C)
    weights: np.ndarray  # (N,) float64, in (0, 1]
    num_classes: int

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class PrototypeSet:
    mu: np.ndarray  # (C, d) float64, unit rows
    support: np.ndarray  # (C,) int64, member count per class


def init_bank(
    features: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    num_classes: int,
) -> MemoryBank:
    """Build a bank from per-sample (label, weight) records."""
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    n = features.shape[0]
    if labels.shape != (n,) or weights.shape != (n,):
        raise ValidationError(
            f"features ({n}), labels ({labels.shape}) and weights ({weights.shape}) disagree"
        )
    if not np.isfinite(weights).all() or (weights <= 0).any():
        i = int(np.where(~np.isfinite(weights) | (weights <= 0))[0][0])
        raise ValidationError(f"weight at index {i} is not a positive finite value")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValidationError(f"labels outside [0, {num_classes})")
    return MemoryBank(features, labels, weights, num_classes)


def compute_prototypes(bank: MemoryBank, fallback_z: np.ndarray) -> PrototypeSet:
    """Weighted per-class feature means, re-normalized to unit length.

    Weights cancel under uniform per-class scaling. A class with no bank
    members inherits its fallback (text prototype) row unchanged.
    """
    if len(bank) == 0:
        raise ValidationError("bank is empty")
    C = bank.num_classes
    d = bank.features.shape[1]
    feats = bank.features.astype(np.float64, copy=False)
    mu = np.empty((C, d), dtype=np.float64)
    support = np.zeros(C, dtype=np.int64)
    fallback = fallback_z.astype(np.float64, copy=False)
    for c in range(C):
        members = np.where(bank.labels == c)[0]
        support[c] = members.size
        if members.size == 0:
            mu[c] = fallback[c]
            continue
        w = bank.weights[members]
        avg = (w[:, None] * feats[members]).sum(axis=0) / w.sum()
        norm = np.linalg.norm(avg)
        if norm < 1e-12:
            raise ValidationError(f"class {c}: weighted feature mean is zero")
        mu[c] = avg / norm
    return PrototypeSet(mu=mu, support=support)


def update_bank(bank: MemoryBank, state) -> MemoryBank:
    """Apply the per-epoch record update.

    Samples flagged clean keep their pseudo-label and confidence; the rest
    take the description-derived label with the adaptive weight. Features
    are never touched.
    """
    if len(state.clean) != len(bank):
        raise ValidationError(f"state has {len(state.clean)} entries for bank of {len(bank)}")
    clean = state.clean
    labels = np.where(clean, state.y_hat, state.y_h).astype(np.int64)
    weights = np.where(clean, state.omega, state.lam)
    noisy_w = weights[~clean]
    if noisy_w.size and ((noisy_w <= 0).any() or (noisy_w >= 1).any()):
        raise ValidationError("adaptive weight outside (0, 1)")
    if labels.min() < 0 or labels.max() >= bank.num_classes:
        raise ValidationError(f"updated labels outside [0, {bank.num_classes})")
    return MemoryBank(bank.features, labels, weights, bank.num_classes)


def save_bank(bank: MemoryBank, path: str | Path) -> None:
    """Checkpoint a bank: features as a blob, labels/weights as JSON sidecar."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_blob(path / "bank_features.f32", bank.features)
    sidecar = {
        "num_classes": bank.num_classes,
        "labels": bank.labels.tolist(),
        "weights": bank.weights.tolist(),
    }
    (path / "bank.json").write_text(json.dumps(sidecar), encoding="utf-8")


def load_bank(path: str | Path, dim: int) -> MemoryBank:
    path = Path(path)
    sidecar = json.loads((path / "bank.json").read_text(encoding="utf-8"))
    labels = np.asarray(sidecar["labels"], dtype=np.int64)
    features = read_blob(path / "bank_features.f32", labels.shape[0], dim)
    return init_bank(
        features, labels, np.asarray(sidecar["weights"]), int(sidecar["num_classes"])
    )
