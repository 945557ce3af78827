"""Brute-force reference for one labeling/scoring/refinement pass.

Everything here is deliberately naive: scalar dot products accumulated with
math.fsum, explicit sorts with (-weight, index) keys, first-occurrence
argmax loops. No code is shared with the vectorized engine except the
counter-based random stream (the random comparison-set draw is part of the
contract, so both sides must consume identical streams) and the bundle
container. Agreement between this and the engine is what the equivalence
tests check.
"""

from __future__ import annotations

import math

from .bundle import EmbeddingBundle
from .errors import ValidationError
from .filtering import STRATEGIES
from .seeding import STREAM_CROSS_SET, stream


def _dot(u, v) -> float:
    return math.fsum(float(a) * float(b) for a, b in zip(u, v))


def _unit(row) -> list[float]:
    nrm = math.sqrt(math.fsum(float(a) * float(a) for a in row))
    if nrm < 1e-12:
        raise ValidationError("zero row")
    return [float(a) / nrm for a in row]


def _softmax(logits: list[float]) -> list[float]:
    top = max(logits)
    e = [math.exp(x - top) for x in logits]
    s = math.fsum(e)
    return [x / s for x in e]


def _argmax(values: list[float]) -> int:
    best, best_v = 0, values[0]
    for j in range(1, len(values)):
        if values[j] > best_v:
            best, best_v = j, values[j]
    return best


def oracle_pipeline(
    bundle: EmbeddingBundle,
    strategy: str,
    k: int = 3,
    k_n: int = 3,
    tau: float = 100.0,
    seed: int = 0,
    epoch: int = 1,
    omega_mode: str = "softmax",
) -> dict:
    """First-epoch labeling state computed the slow, obvious way.

    Returns a dict of plain Python lists: y_hat, y_second, omega, phi, psi,
    clean, cross_sets, and (sentinel-filled at clean positions) r_hat, y_h,
    delta_zeta, lam, neighbors.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}")
    weak = bundle.weak
    n, d = weak.shape
    c = bundle.num_classes
    z_hat = [_unit(bundle.catalog.Z[j]) for j in range(c)]

    y_hat: list[int] = []
    y_second: list[int] = []
    omega: list[float] = []
    for i in range(n):
        sims = [_dot(weak[i], z_hat[j]) for j in range(c)]
        yh = _argmax(sims)
        rest = [sims[j] if j != yh else -math.inf for j in range(c)]
        ys = _argmax(rest)
        probs = _softmax([tau * s for s in sims])
        y_hat.append(yh)
        y_second.append(ys)
        omega.append(probs[yh] if omega_mode == "softmax" else sims[yh])

    # first-epoch bank: pseudo-labels with their confidences as weights
    bank_labels = list(y_hat)
    bank_weights = list(omega)

    mu: list[list[float]] = []
    for j in range(c):
        members = [i for i in range(n) if bank_labels[i] == j]
        if not members:
            mu.append(z_hat[j])
            continue
        total_w = math.fsum(bank_weights[i] for i in members)
        vec = [
            math.fsum(bank_weights[i] * float(weak[i][dd]) for i in members) / total_w
            for dd in range(d)
        ]
        mu.append(_unit(vec))

    phi = [_dot(weak[i], mu[y_hat[i]]) for i in range(n)]

    cross_sets: list[list[int]] = []
    for i in range(n):
        if strategy == "cs":
            cands = [j for j in range(n) if j != i and bank_labels[j] != bank_labels[i]]
            cands.sort(key=lambda j: (-bank_weights[j], j))
            cross_sets.append(cands[:k])
        elif strategy == "rs":
            cands = [j for j in range(n) if j != i and bank_labels[j] != bank_labels[i]]
            if len(cands) <= k:
                cross_sets.append(cands)
            else:
                rng = stream(seed, STREAM_CROSS_SET, epoch, i)
                sel = rng.choice(len(cands), size=k, replace=False)
                cross_sets.append([cands[int(s)] for s in sel])
        else:
            cands = [j for j in range(n) if j != i and bank_labels[j] == y_second[i]]
            cands.sort(key=lambda j: (-bank_weights[j], j))
            cross_sets.append(cands[:k])

    psi: list[float] = []
    clean: list[bool] = []
    for i in range(n):
        cs = cross_sets[i]
        if not cs:
            psi.append(-1.0)
        else:
            psi.append(math.fsum(_dot(weak[i], weak[j]) for j in cs) / len(cs))
        clean.append(phi[i] > psi[i])

    m = bundle.text_desc.shape[0]
    owner = bundle.catalog.owner
    r_hat_all: list[int] = []
    pair_sim: list[float] = []
    for i in range(n):
        sims = [_dot(weak[i], bundle.text_desc[r]) for r in range(m)]
        r = _argmax(sims)
        r_hat_all.append(r)
        pair_sim.append(sims[r])
    assigned_text = [bundle.text_desc[r_hat_all[i]] for i in range(n)]

    r_hat = [-1] * n
    y_h = [-1] * n
    delta_zeta = [math.nan] * n
    lam = [math.nan] * n
    neighbors: list = [None] * n
    for i in range(n):
        if clean[i]:
            continue
        scored = [(j, _dot(assigned_text[i], assigned_text[j])) for j in range(n) if j != i]
        scored.sort(key=lambda t: (-t[1], t[0]))
        nb = [j for j, _ in scored[:k_n]]
        delta = pair_sim[i] - math.fsum(pair_sim[j] for j in nb) / len(nb)
        r_hat[i] = r_hat_all[i]
        y_h[i] = int(owner[r_hat_all[i]])
        delta_zeta[i] = delta
        lam[i] = 1.0 / (1.0 + math.exp(-delta))
        neighbors[i] = nb

    return {
        "y_hat": y_hat,
        "y_second": y_second,
        "omega": omega,
        "phi": phi,
        "psi": psi,
        "clean": clean,
        "cross_sets": cross_sets,
        "r_hat": r_hat,
        "y_h": y_h,
        "delta_zeta": delta_zeta,
        "lam": lam,
        "neighbors": neighbors,
    }
