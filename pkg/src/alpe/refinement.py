"""Neighbor-guided refinement of noisy pseudo-labels.

Samples that fail the clean filter are relabeled through the description
table: each gets the class owning its most similar description embedding.
A per-sample weight lambda in (0, 1) then grades how trustworthy that
image-description match is, by comparing the sample's own image-text
similarity against the mean of its textual neighbors' image-text
similarities and squashing the gap through a sigmoid.

Neighbors are ranked by cosine between assigned description embeddings
(the text side); ranking by image-feature cosine is available behind the
``neighbor_metric`` switch. Pools contain all samples, clean or not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .similarity import sim_matrix, top_k_neighbors


@dataclass
class DescriptionAssignment:
    """Most similar description per sample, over the full dataset."""

    r_hat: np.ndarray  # (N,) int64, description row index
    y_h: np.ndarray  # (N,) int64, owning class of that description
    pair_sim: np.ndarray  # (N,) float64, cosine(f_i, text_desc[r_hat_i])


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def assign_description_label(
    f: np.ndarray, text_desc: np.ndarray, owner: np.ndarray
) -> tuple[int, int]:
    """(description index, owning class) of the description most similar to f.

    Ties break toward the lower description index.
    """
    if text_desc.shape[0] == 0:
        raise ValidationError("description table is empty")
    sims = text_desc.astype(np.float64, copy=False) @ np.asarray(f, dtype=np.float64)
    r_hat = int(np.argmax(sims))
    return r_hat, int(owner[r_hat])


def assign_all(features: np.ndarray, text_desc: np.ndarray, owner: np.ndarray) -> DescriptionAssignment:
    """Vectorized description assignment for every sample."""
    if text_desc.shape[0] == 0:
        raise ValidationError("description table is empty")
    sims = sim_matrix(features, text_desc)
    r_hat = np.argmax(sims, axis=1).astype(np.int64)
    rows = np.arange(features.shape[0])
    return DescriptionAssignment(
        r_hat=r_hat,
        y_h=np.asarray(owner, dtype=np.int64)[r_hat],
        pair_sim=sims[rows, r_hat],
    )


def neighbor_set(i: int, assigned_text: np.ndarray, k_n: int) -> np.ndarray:
    """The k_n samples whose assigned description embeddings are closest to i's.

    Excludes i itself; returns fewer when the dataset is small. Single-sample
    datasets have no neighbors and raise.
    """
    n = assigned_text.shape[0]
    if n < 2:
        raise ValidationError("no neighbors: need at least 2 samples")
    return top_k_neighbors(assigned_text[i], assigned_text, k_n, exclude={i})


def adaptive_weight(
    f_i: np.ndarray,
    r_hat_i: int,
    neighbors: np.ndarray,
    features: np.ndarray,
    assigned_text: np.ndarray,
    text_desc: np.ndarray,
) -> tuple[float, float]:
    """(delta_zeta, lambda) for one sample.

    delta_zeta is the sample's image-description cosine minus the mean of its
    neighbors' own image-description cosines; lambda = sigmoid(delta_zeta).
    """
    neighbors = np.asarray(neighbors, dtype=np.int64)
    if neighbors.size == 0:
        raise ValidationError("empty neighbor list")
    own = float(
        np.dot(
            np.asarray(f_i, dtype=np.float64),
            text_desc[r_hat_i].astype(np.float64, copy=False),
        )
    )
    feats = features.astype(np.float64, copy=False)
    texts = assigned_text.astype(np.float64, copy=False)
    neigh = float(np.mean(np.einsum("ij,ij->i", feats[neighbors], texts[neighbors])))
    delta = own - neigh
    return delta, float(sigmoid(delta))


def refine_noisy(state, features: np.ndarray, text_desc: np.ndarray, owner: np.ndarray, k_n: int):
    """Populate refinement fields for every non-clean sample in ``state``.

    Clean samples are left untouched. Neighbor pools span the whole dataset,
    so description assignments are computed for all samples even though only
    the noisy ones receive refined labels.
    """
    if k_n < 1:
        raise ValidationError(f"k_n must be >= 1, got {k_n}")
    noisy = np.where(~state.clean)[0]
    if noisy.size == 0:
        return state
    assignment = assign_all(features, text_desc, owner)
    assigned_text = text_desc[assignment.r_hat]
    pair_sims = assignment.pair_sim
    for i in noisy:
        nb = neighbor_set(int(i), assigned_text, k_n)
        delta = float(pair_sims[i] - np.mean(pair_sims[nb]))
        state.r_hat[i] = assignment.r_hat[i]
        state.y_h[i] = assignment.y_h[i]
        state.delta_zeta[i] = delta
        state.lam[i] = float(sigmoid(delta))
        state.neighbors[i] = nb
    return state
