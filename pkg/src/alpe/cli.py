"""Command-line front end.

Subcommands cover the pipeline end to end: `synth` builds a benchmark
bundle from a JSON spec, `label` / `filter` / `refine` emit per-sample CSVs
for a single pass, `train` runs the full loop and writes metrics plus
checkpoints, `eval` scores a checkpoint on the test split.

CSV goes to stdout (or --out); progress and accuracy summaries go to
stderr so stdout stays machine-readable. Exit codes: 0 success, 2 for
validation/usage errors, 1 for runtime errors. All floats are rendered
with %.10g and files end with a newline, so identical configs produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .bank import compute_prototypes, init_bank, save_bank
from .bundle import (
    check_embedding_matrix,
    load_bundle,
    normalize_rows,
    read_blob,
    save_bundle,
    write_blob,
)
from .errors import BundleFormatError, ValidationError
from .filtering import STRATEGIES, score_samples
from .labeling import evaluate_accuracy, zero_shot_label
from .refinement import assign_all, neighbor_set, sigmoid
from .synth import SynthSpec, generate
from .training import TrainConfig, run_training

FLOAT_FMT = "%.10g"

LABEL_HEADER = "index,y_hat,omega,y_second"
FILTER_HEADER = "index,y_hat,omega,phi,psi,clean"
REFINE_HEADER = "index,r_hat,y_h,delta_zeta,lambda,neighbors"
TRAIN_HEADER = "epoch,pseudo_acc,clean_count,clean_acc,refined_acc,test_acc,loss_st,loss_n,loss_reg"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return FLOAT_FMT % float(value)


def _emit_csv(header: str, rows, out: str | None) -> None:
    text = "\n".join([header] + [",".join(_fmt(v) for v in row) for row in rows]) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _cmd_synth(args) -> int:
    raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    known = {f.name for f in dataclasses.fields(SynthSpec)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown spec fields: {sorted(unknown)}")
    try:
        spec = SynthSpec(**raw)
    except TypeError as exc:
        raise ValidationError(f"bad spec file: {exc}") from exc
    bundle = generate(spec)
    save_bundle(bundle, args.out)
    _note(
        f"wrote bundle: N={bundle.num_samples} C={bundle.num_classes} "
        f"d={bundle.dim} -> {args.out}"
    )
    return 0


def _cmd_label(args) -> int:
    bundle = load_bundle(args.bundle)
    z = normalize_rows(bundle.catalog.Z)
    labels = zero_shot_label(bundle.weak, z, args.tau)
    rows = [
        (i, labels.y_hat[i], labels.omega[i], labels.y_second[i])
        for i in range(len(labels))
    ]
    _emit_csv(LABEL_HEADER, rows, args.out)
    if bundle.truth_train is not None:
        acc = float(np.mean(labels.y_hat == bundle.truth_train))
        _note("zero_shot_accuracy=" + (FLOAT_FMT % acc))
    return 0


def _single_pass_scores(bundle, strategy: str, k: int, tau: float, seed: int):
    """One standalone scoring pass, keyed like the first training epoch."""
    z = normalize_rows(bundle.catalog.Z)
    labels = zero_shot_label(bundle.weak, z, tau)
    bank = init_bank(bundle.weak, labels.y_hat, labels.omega, bundle.num_classes)
    protos = compute_prototypes(bank, z)
    scores = score_samples(bank, protos, labels, strategy, k, seed, epoch=1)
    return labels, scores


def _cmd_filter(args) -> int:
    bundle = load_bundle(args.bundle)
    labels, scores = _single_pass_scores(bundle, args.strategy, args.k, args.tau, args.seed)
    rows = [
        (i, labels.y_hat[i], labels.omega[i], scores.phi[i], scores.psi[i], scores.clean[i])
        for i in range(len(labels))
    ]
    _emit_csv(FILTER_HEADER, rows, args.out)
    _note(f"clean={int(scores.clean.sum())}/{len(labels)} strategy={args.strategy}")
    return 0


def _cmd_refine(args) -> int:
    bundle = load_bundle(args.bundle)
    assignment = assign_all(bundle.weak, bundle.text_desc, bundle.catalog.owner)
    assigned_text = bundle.text_desc[assignment.r_hat]
    rows = []
    for i in range(bundle.num_samples):
        nb = neighbor_set(i, assigned_text, args.kn)
        delta = float(assignment.pair_sim[i] - np.mean(assignment.pair_sim[nb]))
        rows.append(
            (
                i,
                assignment.r_hat[i],
                assignment.y_h[i],
                delta,
                float(sigmoid(delta)),
                ";".join(str(int(j)) for j in nb),
            )
        )
    _emit_csv(REFINE_HEADER, rows, args.out)
    return 0


def _cmd_train(args) -> int:
    bundle = load_bundle(args.bundle)
    config = TrainConfig(
        strategy=args.strategy,
        k=args.k,
        k_n=args.kn,
        tau=args.tau,
        epochs=args.epochs,
        batch=args.batch,
        lr=args.lr,
        seed=args.seed,
    )
    result = run_training(bundle, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        (
            m.epoch,
            m.pseudo_acc,
            m.clean_count,
            m.clean_acc,
            m.refined_acc,
            m.test_acc,
            m.loss_st,
            m.loss_n,
            m.loss_reg,
        )
        for m in result.metrics
    ]
    _emit_csv(TRAIN_HEADER, rows, str(out / "metrics.csv"))
    write_blob(out / "z_final.f32", result.z)
    if result.bank is not None:
        save_bank(result.bank, out)
    manifest = {
        "command": "train",
        "bundle": str(args.bundle),
        "config": dataclasses.asdict(config),
        "zero_shot_train_acc": result.zero_shot_train_acc,
        "zero_shot_test_acc": result.zero_shot_test_acc,
    }
    (out / "run.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    if result.metrics:
        _note("final_test_acc=" + (FLOAT_FMT % result.metrics[-1].test_acc))
    return 0


def _cmd_eval(args) -> int:
    bundle = load_bundle(args.bundle)
    if bundle.test is None or bundle.truth_test is None:
        raise ValidationError("bundle has no labeled test split")
    z = read_blob(Path(args.z), bundle.num_classes, bundle.dim)
    check_embedding_matrix(z, "z checkpoint")
    acc = evaluate_accuracy(bundle.test, z, bundle.truth_test)
    print(json.dumps({"n_test": int(bundle.test.shape[0]), "test_acc": acc}, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alpe",
        description="Adaptive pseudo-label filtering and refinement on embedding bundles.",
    )
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a synthetic bundle from a JSON spec")
    p.add_argument("--spec", required=True, help="JSON file of generator fields")
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("label", help="zero-shot pseudo-labels for the weak views")
    p.add_argument("--bundle", required=True)
    p.add_argument("--tau", type=float, default=100.0)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("filter", help="clean/noisy scores for one pass")
    p.add_argument("--bundle", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="cs")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--tau", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("refine", help="description labels and adaptive weights")
    p.add_argument("--bundle", required=True)
    p.add_argument("--kn", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("train", help="full training loop with checkpoints")
    p.add_argument("--bundle", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="cs")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--kn", type=int, default=3)
    p.add_argument("--tau", type=float, default=100.0)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for metrics and checkpoints")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="test accuracy of a Z checkpoint")
    p.add_argument("--bundle", required=True)
    p.add_argument("--z", required=True, help="z_final.f32 checkpoint blob")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    limits = None
    if args.threads is not None:
        try:  # best effort: cap BLAS pools when threadpoolctl is around
            import threadpoolctl

            limits = threadpoolctl.threadpool_limits(args.threads)
        except ImportError:
            _note("threadpoolctl not installed; --threads ignored")
    try:
        return args.func(args)
    except (ValidationError, BundleFormatError, json.JSONDecodeError) as exc:
        _note(f"error: {exc}")
        return 2
    except OSError as exc:
        _note(f"error: {exc}")
        return 1
    finally:
        if limits is not None:
            limits.unregister()


if __name__ == "__main__":
    sys.exit(main())
