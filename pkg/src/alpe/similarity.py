"""Shared cosine-similarity kernels and deterministic top-k selection.

Inputs are unit-norm rows, so cosine similarity reduces to a dot product.
Storage is float32; kernels accumulate in float64 so that the vectorized
paths agree with scalar recomputation to well below every documented
tolerance, and so near-ties in top-k selection resolve identically across
code paths. All ties break toward the lower index.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two unit vectors (their dot product)."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u.astype(np.float64, copy=False), v.astype(np.float64, copy=False)))


def sim_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine matrix: entry (i, j) = cosine(a[i], b[j])."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[1]:
        raise ValidationError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]} columns"
        )
    return a.astype(np.float64, copy=False) @ b.astype(np.float64, copy=False).T


def softmax_probs(sims: np.ndarray, tau: float) -> np.ndarray:
    """Temperature softmax over similarity logits ``tau * sims``.

    Works on a single row or a batch of rows (softmax over the last axis).
    Uses max-subtraction for stability; tau=1 recovers the unscaled form.
    """
    if tau <= 0:
        raise ValidationError(f"tau must be > 0, got {tau}")
    sims = np.asarray(sims, dtype=np.float64)
    logits = tau * sims
    logits = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=-1, keepdims=True)


def top_k_by_weight(candidates: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """The min(k, len(candidates)) candidates with the largest weights.

    ``weights[j]`` belongs to ``candidates[j]``. Returned in descending
    weight order; equal weights break toward the smaller candidate index.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    candidates = np.asarray(candidates, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if candidates.shape != weights.shape:
        raise ValidationError(
            f"candidates ({candidates.shape}) and weights ({weights.shape}) differ"
        )
    if not np.isfinite(weights).all():
        raise ValidationError("weights must be finite")
    if candidates.size == 0:
        return candidates
    # lexsort: last key is primary, so order by -weight then candidate index
    order = np.lexsort((candidates, -weights))
    return candidates[order[: min(k, candidates.size)]]


def top_k_neighbors(
    query: np.ndarray,
    pool: np.ndarray,
    k: int,
    exclude: set[int] | frozenset[int] = frozenset(),
) -> np.ndarray:
    """Indices of the k pool rows most cosine-similar to ``query``.

    Excluded indices are skipped; fewer than k are returned when the pool
    runs out. Ties break toward the lower row index.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    pool = np.asarray(pool)
    sims = pool.astype(np.float64, copy=False) @ np.asarray(query, dtype=np.float64)
    keep = np.ones(pool.shape[0], dtype=bool)
    for i in exclude:
        if 0 <= i < pool.shape[0]:
            keep[i] = False
    idx = np.where(keep)[0]
    if idx.size == 0:
        raise ValidationError("no neighbors: pool is empty after exclusion")
    order = np.lexsort((idx, -sims[idx]))
    return idx[order[: min(k, idx.size)]]
