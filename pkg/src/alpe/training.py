"""Losses, gradients, optimizer, and the epoch loop.

The only trainable parameters are the text prototypes Z. Each epoch runs,
in order: zero-shot labeling of the weak views, visual prototypes from the
memory bank, clean/noisy scoring, refinement of the noisy samples, the bank
update, and finally mini-batch AdamW steps on the strong views with the
epoch's label state frozen.

Three loss terms, each averaged over the full batch (masked samples
contribute zero):

    self-training    cross-entropy of clean samples on their pseudo-label
    noisy            lambda-weighted cross-entropy of non-clean samples on
                     their description-derived label
    balance          negative mean log of the batch-mean class probabilities

Losses and gradients are accumulated in float64. Z is re-normalized row-wise
after every optimizer step, and the analytic gradient includes the chain
through that normalization, so it matches finite differences on the raw
entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bank import MemoryBank, compute_prototypes, init_bank, update_bank
from .bundle import EmbeddingBundle, normalize_rows
from .errors import ValidationError
from .filtering import STRATEGIES, FilterScores, score_samples
from .labeling import PseudoLabels, evaluate_accuracy, zero_shot_label
from .refinement import refine_noisy
from .seeding import STREAM_SHUFFLE, stream

LOG_EPS = 1e-12


@dataclass
class TrainConfig:
    strategy: str = "cs"
    k: int = 3
    k_n: int = 3
    tau: float = 100.0
    epochs: int = 15
    batch: int = 64
    lr: float = 5e-5
    weight_decay: float = 0.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    schedule: str = "cosine"
    seed: int = 0
    omega_mode: str = "softmax"
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.k < 1 or self.k_n < 1:
            raise ValidationError("k and k_n must be >= 1")
        if self.tau <= 0:
            raise ValidationError(f"tau must be > 0, got {self.tau}")
        if self.lr <= 0:
            raise ValidationError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 0 or self.batch < 1:
            raise ValidationError("epochs must be >= 0 and batch >= 1")
        if self.schedule != "cosine":
            raise ValidationError(f"unknown schedule {self.schedule!r}")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        if self.omega_mode not in ("softmax", "raw-cosine"):
            raise ValidationError(f"unknown omega_mode {self.omega_mode!r}")


@dataclass
class LabelState:
    """Frozen per-epoch labeling state for the whole dataset.

    Refinement fields hold sentinels (-1 label, NaN weight, None neighbor
    list) at clean positions; they are populated only for noisy samples.
    """

    y_hat: np.ndarray  # (N,) int64
    y_second: np.ndarray  # (N,) int64
    omega: np.ndarray  # (N,) float64
    phi: np.ndarray  # (N,) float64
    psi: np.ndarray  # (N,) float64
    clean: np.ndarray  # (N,) bool
    r_hat: np.ndarray  # (N,) int64, -1 where clean
    y_h: np.ndarray  # (N,) int64, -1 where clean
    lam: np.ndarray  # (N,) float64, NaN where clean
    delta_zeta: np.ndarray  # (N,) float64, NaN where clean
    neighbors: list = field(default_factory=list)  # per sample, None where clean

    @classmethod
    def from_parts(cls, labels: PseudoLabels, scores: FilterScores) -> "LabelState":
        n = len(labels)
        return cls(
            y_hat=labels.y_hat.copy(),
            y_second=labels.y_second.copy(),
            omega=labels.omega.copy(),
            phi=scores.phi.copy(),
            psi=scores.psi.copy(),
            clean=scores.clean.copy(),
            r_hat=np.full(n, -1, dtype=np.int64),
            y_h=np.full(n, -1, dtype=np.int64),
            lam=np.full(n, np.nan),
            delta_zeta=np.full(n, np.nan),
            neighbors=[None] * n,
        )

    def take(self, idx: np.ndarray) -> "LabelState":
        """Sub-state for a batch of sample indices."""
        return LabelState(
            y_hat=self.y_hat[idx],
            y_second=self.y_second[idx],
            omega=self.omega[idx],
            phi=self.phi[idx],
            psi=self.psi[idx],
            clean=self.clean[idx],
            r_hat=self.r_hat[idx],
            y_h=self.y_h[idx],
            lam=self.lam[idx],
            delta_zeta=self.delta_zeta[idx],
            neighbors=[self.neighbors[i] for i in idx],
        )

    def __len__(self) -> int:
        return self.y_hat.shape[0]


@dataclass
class EpochMetrics:
    epoch: int
    pseudo_acc: float
    clean_count: int
    clean_acc: float
    refined_acc: float
    test_acc: float
    loss_st: float
    loss_n: float
    loss_reg: float

    FIELDS = (
        "epoch",
        "pseudo_acc",
        "clean_count",
        "clean_acc",
        "refined_acc",
        "test_acc",
        "loss_st",
        "loss_n",
        "loss_reg",
    )


@dataclass
class TrainResult:
    metrics: list[EpochMetrics]
    z: np.ndarray  # (C, d) float32, unit rows
    bank: MemoryBank | None
    zero_shot_train_acc: float
    zero_shot_test_acc: float


def _forward(strong: np.ndarray, z_raw: np.ndarray, tau: float):
    """Normalized prototypes, softmax rows, and batch-mean probabilities."""
    z64 = np.asarray(z_raw, dtype=np.float64)
    norms = np.linalg.norm(z64, axis=1)
    if (norms < 1e-12).any():
        raise ValidationError("zero prototype row")
    z_hat = z64 / norms[:, None]
    s = strong.astype(np.float64, copy=False)
    logits = tau * (s @ z_hat.T)
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    return z_hat, norms, s, probs, probs.mean(axis=0)


def loss_st(strong: np.ndarray, z: np.ndarray, state: LabelState, tau: float) -> float:
    """Clean-masked self-training cross-entropy, averaged over the batch."""
    _, _, _, probs, _ = _forward(strong, z, tau)
    b = strong.shape[0]
    picked = probs[np.arange(b), state.y_hat]
    terms = np.where(state.clean, -np.log(np.maximum(picked, LOG_EPS)), 0.0)
    return float(terms.sum() / b)


def loss_n(strong: np.ndarray, z: np.ndarray, state: LabelState, tau: float) -> float:
    """Weighted cross-entropy of non-clean samples on their refined labels."""
    noisy = ~state.clean
    if noisy.any() and ((state.y_h[noisy] < 0).any() or np.isnan(state.lam[noisy]).any()):
        raise ValidationError("noisy sample missing refinement fields")
    _, _, _, probs, _ = _forward(strong, z, tau)
    b = strong.shape[0]
    safe_y = np.maximum(state.y_h, 0)
    picked = probs[np.arange(b), safe_y]
    terms = np.where(noisy, -np.nan_to_num(state.lam) * np.log(np.maximum(picked, LOG_EPS)), 0.0)
    return float(terms.sum() / b)


def loss_reg(strong: np.ndarray, z: np.ndarray, tau: float) -> float:
    """Prediction-balance term: -(1/C) sum_j log mean-batch-probability of j."""
    _, _, _, _, p_bar = _forward(strong, z, tau)
    return float(-np.mean(np.log(np.maximum(p_bar, LOG_EPS))))


def total_loss_and_grad(
    strong: np.ndarray,
    z_raw: np.ndarray,
    state: LabelState,
    tau: float,
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
):
    """All three losses and the analytic gradient of their weighted sum.

    The gradient is taken with respect to the raw Z entries and includes the
    chain through row normalization. Entries whose log argument is clamped at
    LOG_EPS contribute zero gradient, exactly like the loss they produce.
    """
    w_st, w_n, w_reg = loss_weights
    z_hat, norms, s, probs, p_bar = _forward(strong, z_raw, tau)
    b, c = probs.shape
    rows = np.arange(b)

    noisy = ~state.clean
    if noisy.any() and ((state.y_h[noisy] < 0).any() or np.isnan(state.lam[noisy]).any()):
        raise ValidationError("noisy sample missing refinement fields")

    picked_st = probs[rows, state.y_hat]
    l_st = float(np.where(state.clean, -np.log(np.maximum(picked_st, LOG_EPS)), 0.0).sum() / b)
    safe_y = np.maximum(state.y_h, 0)
    picked_n = probs[rows, safe_y]
    lam = np.nan_to_num(state.lam)
    l_n = float(np.where(noisy, -lam * np.log(np.maximum(picked_n, LOG_EPS)), 0.0).sum() / b)
    l_reg = float(-np.mean(np.log(np.maximum(p_bar, LOG_EPS))))

    # d(total)/d(logits); clamped logs are flat, so their rows drop out
    alpha = np.where(state.clean & (picked_st > LOG_EPS), w_st / b, 0.0)
    beta = np.where(noisy & (picked_n > LOG_EPS), w_n * lam / b, 0.0)
    d_logits = (alpha + beta)[:, None] * probs
    np.add.at(d_logits, (rows, state.y_hat), -alpha)
    np.add.at(d_logits, (rows, safe_y), -beta)

    q = np.where(p_bar > LOG_EPS, w_reg / (c * np.maximum(p_bar, LOG_EPS)), 0.0)
    r = probs @ q
    d_logits += probs * (r[:, None] - q[None, :]) / b

    g_hat = tau * (d_logits.T @ s)  # (C, d), gradient at the normalized rows
    # pull back through z_hat = z / ||z||
    radial = np.einsum("ij,ij->i", g_hat, z_hat)
    g_raw = (g_hat - radial[:, None] * z_hat) / norms[:, None]
    return (l_st, l_n, l_reg), g_raw


def grad_total(
    strong: np.ndarray,
    z_raw: np.ndarray,
    state: LabelState,
    tau: float,
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> np.ndarray:
    """Gradient of the weighted total loss with respect to raw Z entries."""
    _, grad = total_loss_and_grad(strong, z_raw, state, tau, loss_weights)
    return grad


@dataclass
class AdamWState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, z: np.ndarray) -> "AdamWState":
        return cls(m=np.zeros_like(z, dtype=np.float64), v=np.zeros_like(z, dtype=np.float64))


def adamw_step(
    z: np.ndarray,
    grad: np.ndarray,
    opt: AdamWState,
    lr_t: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> tuple[np.ndarray, AdamWState]:
    """One decoupled-weight-decay adaptive-moment step; rows re-normalized."""
    if grad.shape != z.shape:
        raise ValidationError(f"grad shape {grad.shape} != z shape {z.shape}")
    t = opt.t + 1
    m = beta1 * opt.m + (1.0 - beta1) * grad
    v = beta2 * opt.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    z_new = z - lr_t * m_hat / (np.sqrt(v_hat) + eps) - lr_t * weight_decay * z
    return normalize_rows(z_new), AdamWState(m=m, v=v, t=t)


def cosine_lr(step: int, total_steps: int, lr0: float) -> float:
    """Cosine decay from lr0 to 0 over total_steps, no warmup."""
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return lr0
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def compute_epoch_state(
    bundle: EmbeddingBundle,
    z_unit: np.ndarray,
    bank: MemoryBank | None,
    config: TrainConfig,
    epoch: int = 1,
) -> tuple[LabelState, MemoryBank, PseudoLabels]:
    """Phases 1-4 of an epoch: label, score, refine. Returns the frozen state.

    The bank is created from this epoch's pseudo-labels when none exists yet
    (the first epoch); afterwards it carries the previous epoch's update.
    """
    labels = zero_shot_label(bundle.weak, z_unit, config.tau, config.omega_mode)
    if bank is None:
        bank = init_bank(bundle.weak, labels.y_hat, labels.omega, bundle.num_classes)
    protos = compute_prototypes(bank, z_unit)
    scores = score_samples(bank, protos, labels, config.strategy, config.k, config.seed, epoch)
    state = LabelState.from_parts(labels, scores)
    refine_noisy(state, bundle.weak, bundle.text_desc, bundle.catalog.owner, config.k_n)
    return state, bank, labels


def _accuracy_or_nan(pred: np.ndarray, truth: np.ndarray | None) -> float:
    if truth is None or pred.size == 0:
        return float("nan")
    return float(np.mean(pred == truth))


def run_training(bundle: EmbeddingBundle, config: TrainConfig) -> TrainResult:
    """Full training loop. Deterministic given the config seed."""
    bundle.validate()
    n = bundle.num_samples
    z_raw = bundle.catalog.Z.astype(np.float64)
    z0 = normalize_rows(z_raw)
    zs_train = (
        evaluate_accuracy(bundle.weak, z0, bundle.truth_train)
        if bundle.truth_train is not None
        else float("nan")
    )
    zs_test = (
        evaluate_accuracy(bundle.test, z0, bundle.truth_test)
        if bundle.test is not None and bundle.truth_test is not None
        else float("nan")
    )

    steps_per_epoch = math.ceil(n / config.batch)
    total_steps = config.epochs * steps_per_epoch
    opt = AdamWState.zeros_like(z_raw)
    bank: MemoryBank | None = None
    metrics: list[EpochMetrics] = []
    gstep = 0

    for epoch in range(1, config.epochs + 1):
        z_unit = normalize_rows(z_raw)
        state, bank, _ = compute_epoch_state(bundle, z_unit, bank, config, epoch)

        truth = bundle.truth_train
        pseudo_acc = _accuracy_or_nan(state.y_hat, truth)
        clean_count = int(state.clean.sum())
        if truth is not None and clean_count > 0:
            clean_acc = float(np.mean(state.y_hat[state.clean] == truth[state.clean]))
        else:
            clean_acc = float("nan")

        bank = update_bank(bank, state)
        refined_acc = _accuracy_or_nan(bank.labels, truth)

        perm = stream(config.seed, STREAM_SHUFFLE, epoch).permutation(n)
        sums = np.zeros(3)
        for start in range(0, n, config.batch):
            idx = perm[start : start + config.batch]
            losses, grad = total_loss_and_grad(
                bundle.strong[idx], z_raw, state.take(idx), config.tau, config.loss_weights
            )
            lr_t = cosine_lr(gstep, total_steps, config.lr)
            z_raw, opt = adamw_step(
                z_raw,
                grad,
                opt,
                lr_t,
                config.adam_beta1,
                config.adam_beta2,
                config.adam_eps,
                config.weight_decay,
            )
            gstep += 1
            sums += losses
        mean_losses = sums / steps_per_epoch

        z_unit_end = normalize_rows(z_raw)
        test_acc = (
            evaluate_accuracy(bundle.test, z_unit_end, bundle.truth_test)
            if bundle.test is not None and bundle.truth_test is not None
            else float("nan")
        )
        metrics.append(
            EpochMetrics(
                epoch=epoch,
                pseudo_acc=pseudo_acc,
                clean_count=clean_count,
                clean_acc=clean_acc,
                refined_acc=refined_acc,
                test_acc=test_acc,
                loss_st=float(mean_losses[0]),
                loss_n=float(mean_losses[1]),
                loss_reg=float(mean_losses[2]),
            )
        )

    return TrainResult(
        metrics=metrics,
        z=normalize_rows(z_raw).astype(np.float32),
        bank=bank,
        zero_shot_train_acc=zs_train,
        zero_shot_test_acc=zs_test,
    )
