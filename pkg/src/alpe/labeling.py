"""Zero-shot labeling against text prototypes.

Pseudo-labels come from the weak view: each sample is assigned the class
whose prototype row of Z it is most cosine-similar to, together with a
confidence score and the runner-up class. Prototypes are initialized by
averaging each class's description embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import ClassCatalog
from .errors import ValidationError
from .similarity import sim_matrix, softmax_probs


@dataclass
class PseudoLabels:
    """Per-sample zero-shot outputs, stored as parallel arrays.

    y_hat is the argmax class, y_second the runner-up, omega the confidence
    of the winning class, probs the full softmax row.
    """

    y_hat: np.ndarray  # (N,) int64
    y_second: np.ndarray  # (N,) int64
    omega: np.ndarray  # (N,) float64
    probs: np.ndarray  # (N, C) float64

    def __len__(self) -> int:
        return self.y_hat.shape[0]


def init_text_prototypes(text_desc: np.ndarray, catalog: ClassCatalog) -> np.ndarray:
    """Initial prototypes: unit-normalized per-class mean of description rows.

    Returns a (C, d) float32 matrix. A class whose description mean is
    (numerically) zero cannot be normalized and raises.
    """
    owner = np.asarray(catalog.owner)
    C = catalog.num_classes
    d = text_desc.shape[1]
    if owner.shape[0] != text_desc.shape[0]:
        raise ValidationError(
            f"owner has {owner.shape[0]} entries for {text_desc.shape[0]} description rows"
        )
    z = np.empty((C, d), dtype=np.float64)
    desc64 = text_desc.astype(np.float64, copy=False)
    for c in range(C):
        rows = desc64[owner == c]
        if rows.shape[0] == 0:
            raise ValidationError(f"class {c} owns no descriptions")
        mean = rows.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm < 1e-8:
            raise ValidationError(
                f"class {c}: description mean has norm {norm:.2e}, cannot normalize"
            )
        z[c] = mean / norm
    return z.astype(np.float32)


def zero_shot_label(
    features: np.ndarray,
    z: np.ndarray,
    tau: float,
    omega_mode: str = "softmax",
) -> PseudoLabels:
    """Label every feature row by its most similar prototype.

    omega_mode "softmax" takes the winning softmax probability as the
    confidence (always positive, as the memory bank requires); "raw-cosine"
    takes the winning cosine itself.
    """
    if z.shape[0] < 2:
        raise ValidationError(f"need at least 2 classes, got {z.shape[0]}")
    if omega_mode not in ("softmax", "raw-cosine"):
        raise ValidationError(f"unknown omega_mode {omega_mode!r}")
    sims = sim_matrix(features, z)
    probs = softmax_probs(sims, tau)
    y_hat = np.argmax(sims, axis=1)  # first occurrence wins ties
    masked = sims.copy()
    masked[np.arange(len(y_hat)), y_hat] = -np.inf
    y_second = np.argmax(masked, axis=1)
    if omega_mode == "softmax":
        omega = probs[np.arange(len(y_hat)), y_hat]
    else:
        omega = sims[np.arange(len(y_hat)), y_hat]
    return PseudoLabels(
        y_hat=y_hat.astype(np.int64),
        y_second=y_second.astype(np.int64),
        omega=omega,
        probs=probs,
    )


def evaluate_accuracy(features: np.ndarray, z: np.ndarray, truth: np.ndarray | None) -> float:
    """Fraction of rows whose nearest prototype matches the truth label."""
    if truth is None:
        raise ValidationError("missing truth labels")
    truth = np.asarray(truth)
    if truth.shape[0] != features.shape[0]:
        raise ValidationError(
            f"{features.shape[0]} features but {truth.shape[0]} truth labels"
        )
    pred = np.argmax(sim_matrix(features, z), axis=1)
    return float(np.mean(pred == truth))
