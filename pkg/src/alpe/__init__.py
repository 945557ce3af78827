"""Adaptive pseudo-label filtering and refinement for embedding classifiers.

The package operates on bundles of precomputed unit-norm embeddings (weak
and strong augmented views, a per-class description table, an initial text
prototype matrix). It pseudo-labels samples zero-shot, splits them into
clean and noisy via prototype scores against a memory bank, relabels the
noisy ones through their nearest descriptions with an adaptive trust
weight, and fine-tunes the prototype matrix with a three-part loss.
"""

from .bank import (
    MemoryBank,
    PrototypeSet,
    compute_prototypes,
    init_bank,
    load_bank,
    save_bank,
    update_bank,
)
from .bundle import (
    ClassCatalog,
    EmbeddingBundle,
    load_bundle,
    normalize_rows,
    read_blob,
    save_bundle,
    with_z,
    write_blob,
)
from .errors import BundleFormatError, ValidationError
from .filtering import (
    EMPTY_SET_PSI,
    STRATEGIES,
    FilterScores,
    build_cross_set_cs,
    build_cross_set_fs,
    build_cross_set_rs,
    clean_mask,
    cross_class_separation,
    in_class_score,
    score_samples,
    threshold_filter,
)
from .labeling import PseudoLabels, evaluate_accuracy, init_text_prototypes, zero_shot_label
from .oracle import oracle_pipeline
from .refinement import (
    DescriptionAssignment,
    adaptive_weight,
    assign_all,
    assign_description_label,
    neighbor_set,
    refine_noisy,
    sigmoid,
)
from .seeding import stream
from .similarity import cosine, sim_matrix, softmax_probs, top_k_by_weight, top_k_neighbors
from .synth import SynthSpec, benchmark_spec, generate, noise_sweep, oracle_spec
from .training import (
    AdamWState,
    EpochMetrics,
    LabelState,
    TrainConfig,
    TrainResult,
    adamw_step,
    compute_epoch_state,
    cosine_lr,
    grad_total,
    loss_n,
    loss_reg,
    loss_st,
    run_training,
    total_loss_and_grad,
)

__version__ = "0.1.0"

__all__ = [
    "AdamWState",
    "BundleFormatError",
    "ClassCatalog",
    "DescriptionAssignment",
    "EMPTY_SET_PSI",
    "EmbeddingBundle",
    "EpochMetrics",
    "FilterScores",
    "LabelState",
    "MemoryBank",
    "PrototypeSet",
    "PseudoLabels",
    "STRATEGIES",
    "SynthSpec",
    "TrainConfig",
    "TrainResult",
    "ValidationError",
    "adamw_step",
    "adaptive_weight",
    "assign_all",
    "assign_description_label",
    "benchmark_spec",
    "build_cross_set_cs",
    "build_cross_set_fs",
    "build_cross_set_rs",
    "clean_mask",
    "compute_epoch_state",
    "compute_prototypes",
    "cosine",
    "cosine_lr",
    "cross_class_separation",
    "evaluate_accuracy",
    "generate",
    "grad_total",
    "in_class_score",
    "init_bank",
    "init_text_prototypes",
    "load_bank",
    "load_bundle",
    "loss_n",
    "loss_reg",
    "loss_st",
    "neighbor_set",
    "noise_sweep",
    "normalize_rows",
    "oracle_pipeline",
    "oracle_spec",
    "read_blob",
    "refine_noisy",
    "run_training",
    "save_bank",
    "save_bundle",
    "score_samples",
    "sigmoid",
    "sim_matrix",
    "softmax_probs",
    "stream",
    "threshold_filter",
    "top_k_by_weight",
    "top_k_neighbors",
    "total_loss_and_grad",
    "update_bank",
    "with_z",
    "write_blob",
    "zero_shot_label",
]
