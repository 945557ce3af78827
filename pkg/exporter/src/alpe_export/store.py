"""Writer for the embedding-bundle directory format.

Implemented independently of any consumer: a bundle is a directory with
``manifest.json`` plus float32 little-endian row-major blobs, each prefixed
by an 8-byte header (magic ``ALPE``, u16 version 1, u16 reserved 0). The
manifest carries dimensions, class names, description strings, the
description-to-class owner map, a ``normalized`` flag, and optional ground
truth arrays for evaluation.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ExportError

BLOB_MAGIC = b"ALPE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHH")  # magic, version, reserved

UNIT_NORM_ATOL = 1e-5


def unit_check(m: np.ndarray, name: str) -> np.ndarray:
    """Require a float32 matrix of unit-norm rows and return it."""
    m = np.asarray(m)
    if m.ndim != 2 or m.dtype != np.float32:
        raise ExportError(f"{name}: expected a float32 matrix, got {m.dtype} {m.shape}")
    if not np.isfinite(m).all():
        raise ExportError(f"{name}: non-finite entries")
    norms = np.linalg.norm(m.astype(np.float64), axis=1)
    off = np.abs(norms - 1.0)
    if off.size and off.max() > UNIT_NORM_ATOL:
        i = int(np.argmax(off))
        raise ExportError(f"{name}: row {i} has norm {norms[i]:.8f}, expected 1")
    return m


def write_blob(path: Path, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BLOB_MAGIC, FORMAT_VERSION, 0))
        fh.write(matrix.astype("<f4", copy=False).tobytes())


def write_bundle(
    out_dir: str | Path,
    *,
    weak: np.ndarray,
    strong: np.ndarray,
    text_desc: np.ndarray,
    z_init: np.ndarray,
    class_names: list[str],
    descriptions: list[str],
    owner: np.ndarray,
    m_per_class: int,
    test: np.ndarray | None = None,
    truth_train: np.ndarray | None = None,
    truth_test: np.ndarray | None = None,
) -> Path:
    """Write a complete bundle directory and return its path."""
    weak = unit_check(weak, "weak")
    strong = unit_check(strong, "strong")
    text_desc = unit_check(text_desc, "textdesc")
    z_init = unit_check(z_init, "z_init")
    if strong.shape != weak.shape:
        raise ExportError(f"weak {weak.shape} and strong {strong.shape} shapes differ")
    owner = np.asarray(owner, dtype=np.int64)
    c = len(class_names)
    if z_init.shape[0] != c:
        raise ExportError(f"z_init has {z_init.shape[0]} rows for {c} classes")
    if len(descriptions) != text_desc.shape[0] or owner.shape[0] != text_desc.shape[0]:
        raise ExportError(
            f"{text_desc.shape[0]} description rows, {len(descriptions)} strings, "
            f"{owner.shape[0]} owner entries"
        )
    if owner.size and (owner.min() < 0 or owner.max() >= c):
        raise ExportError(f"owner entries outside [0, {c})")
    if np.bincount(owner, minlength=c).min() < 1:
        raise ExportError("every class needs at least one description")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_test = 0 if test is None else test.shape[0]
    manifest = {
        "version": FORMAT_VERSION,
        "N": int(weak.shape[0]),
        "N_test": int(n_test),
        "d": int(weak.shape[1]),
        "C": c,
        "M": int(m_per_class),
        "class_names": list(class_names),
        "descriptions": list(descriptions),
        "owner": owner.tolist(),
        "flags": {"normalized": True},
    }
    if truth_train is not None:
        manifest["truth_train"] = np.asarray(truth_train, dtype=np.int64).tolist()
    if truth_test is not None:
        manifest["truth_test"] = np.asarray(truth_test, dtype=np.int64).tolist()
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    write_blob(out_dir / "weak.f32", weak)
    write_blob(out_dir / "strong.f32", strong)
    write_blob(out_dir / "textdesc.f32", text_desc)
    write_blob(out_dir / "z_init.f32", z_init)
    if test is not None:
        write_blob(out_dir / "test.f32", unit_check(test, "test"))
    return out_dir
