"""Embedding bundle types and on-disk format.

A bundle directory holds every input the pipeline needs: unit-norm embedding
matrices for the weak/strong training views and the optional test split, the
class-description embeddings, the class catalog, and optional ground-truth
labels used for metrics only.

Directory layout (format version 1):

    manifest.json   UTF-8 JSON: version, N, N_test, d, C, M, class_names,
                    descriptions, owner, flags.normalized, optional
                    truth_train / truth_test arrays
    weak.f32        N x d        weak-view image features
    strong.f32      N x d        strong-view image features
    test.f32        N_test x d   test features (omitted when N_test == 0)
    textdesc.f32    (C*M) x d    class-description embeddings
    z_init.f32      C x d        initial text prototypes

Each .f32 blob starts with an 8-byte header: magic b"ALPE", u16 version=1,
u16 reserved=0 (little-endian), followed by the float32 little-endian
row-major payload. Matrices are stored as float32; loading preserves the
exact bytes so save -> load -> save round-trips bit-identically.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BundleFormatError, ValidationError

BLOB_MAGIC = b"ALPE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHH")  # magic, version, reserved

UNIT_NORM_ATOL = 1e-5


def normalize_rows(m: np.ndarray) -> np.ndarray:
    """Scale every row of ``m`` to unit Euclidean norm.

    Norms are accumulated in float64 and the result keeps the input dtype.
    Raises ValidationError on a zero row, naming its index.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {m.shape}")
    norms = np.linalg.norm(m.astype(np.float64, copy=False), axis=1)
    bad = np.where(norms < 1e-12)[0]
    if bad.size:
        raise ValidationError(f"cannot normalize zero row at index {int(bad[0])}")
    out = m.astype(np.float64, copy=False) / norms[:, None]
    return out.astype(m.dtype, copy=False)


def check_embedding_matrix(m: np.ndarray, name: str = "matrix") -> None:
    """Validate the embedding-matrix invariants: shape, finiteness, unit rows."""
    if m.ndim != 2:
        raise ValidationError(f"{name}: expected 2-D, got shape {m.shape}")
    n, d = m.shape
    if n < 1 or d < 2:
        raise ValidationError(f"{name}: need N >= 1 and d >= 2, got {n} x {d}")
    if not np.isfinite(m).all():
        raise ValidationError(f"{name}: non-finite entries")
    norms = np.linalg.norm(m.astype(np.float64, copy=False), axis=1)
    off = np.abs(norms - 1.0)
    if off.max() > UNIT_NORM_ATOL:
        i = int(np.argmax(off))
        raise ValidationError(
            f"{name}: row {i} has norm {norms[i]:.8f}, expected 1 within {UNIT_NORM_ATOL:g}"
        )


@dataclass
class ClassCatalog:
    """Class names, their text descriptions, and the learnable prototypes.

    ``owner[j]`` is the class that description ``j`` belongs to (the
    description-to-label mapping). ``Z`` (C x d, unit rows) is the only
    trainable parameter set in the pipeline.
    """

    class_names: list[str]
    descriptions: list[str]
    owner: np.ndarray  # (len(descriptions),) int64, values in [0, C)
    Z: np.ndarray  # (C, d) float32, unit rows

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def validate(self) -> None:
        C = self.num_classes
        if C < 1:
            raise ValidationError("catalog: need at least one class")
        if len(self.descriptions) != len(self.owner):
            raise ValidationError(
                f"catalog: {len(self.descriptions)} descriptions but "
                f"{len(self.owner)} owner entries"
            )
        owner = np.asarray(self.owner)
        if owner.size and (owner.min() < 0 or owner.max() >= C):
            raise ValidationError("catalog: owner entries outside [0, C)")
        counts = np.bincount(owner, minlength=C)
        empty = np.where(counts == 0)[0]
        if empty.size:
            raise ValidationError(f"catalog: class {int(empty[0])} owns no descriptions")
        check_embedding_matrix(self.Z, "catalog.Z")
        if self.Z.shape[0] != C:
            raise ValidationError(
                f"catalog: Z has {self.Z.shape[0]} rows for {C} classes"
            )


@dataclass
class EmbeddingBundle:
    """In-memory view of a bundle directory.

    Truth labels are carried for metrics only; nothing on the training path
    may read them.
    """

    weak: np.ndarray  # (N, d) float32
    strong: np.ndarray  # (N, d) float32
    text_desc: np.ndarray  # (C*M, d) float32
    catalog: ClassCatalog
    test: np.ndarray | None = None  # (N_test, d) float32
    truth_train: np.ndarray | None = None  # (N,) int64
    truth_test: np.ndarray | None = None  # (N_test,) int64
    descriptions_per_class: int = field(default=0)

    @property
    def num_samples(self) -> int:
        return self.weak.shape[0]

    @property
    def dim(self) -> int:
        return self.weak.shape[1]

    @property
    def num_classes(self) -> int:
        return self.catalog.num_classes

    def validate(self) -> None:
        check_embedding_matrix(self.weak, "weak")
        check_embedding_matrix(self.strong, "strong")
        check_embedding_matrix(self.text_desc, "textdesc")
        self.catalog.validate()
        if self.strong.shape != self.weak.shape:
            raise ValidationError(
                f"weak {self.weak.shape} and strong {self.strong.shape} shapes differ"
            )
        d = self.dim
        for name, m in (("textdesc", self.text_desc), ("catalog.Z", self.catalog.Z)):
            if m.shape[1] != d:
                raise ValidationError(f"{name}: dim {m.shape[1]} != bundle dim {d}")
        if self.text_desc.shape[0] != len(self.catalog.descriptions):
            raise ValidationError(
                f"textdesc has {self.text_desc.shape[0]} rows for "
                f"{len(self.catalog.descriptions)} catalog descriptions"
            )
        if self.test is not None:
            check_embedding_matrix(self.test, "test")
            if self.test.shape[1] != d:
                raise ValidationError(f"test: dim {self.test.shape[1]} != bundle dim {d}")
        C = self.num_classes
        for name, labels, n in (
            ("truth_train", self.truth_train, self.num_samples),
            ("truth_test", self.truth_test, None if self.test is None else self.test.shape[0]),
        ):
            if labels is None:
                continue
            if n is None:
                raise ValidationError(f"{name} present but its split is missing")
            labels = np.asarray(labels)
            if labels.shape != (n,):
                raise ValidationError(f"{name}: expected shape ({n},), got {labels.shape}")
            if labels.size and (labels.min() < 0 or labels.max() >= C):
                raise ValidationError(f"{name}: labels outside [0, {C})")


def write_blob(path: Path, matrix: np.ndarray) -> None:
    """Write a float32 matrix as a headered .f32 blob."""
    data = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BLOB_MAGIC, FORMAT_VERSION, 0))
        fh.write(data.tobytes())


def read_blob(path: Path, rows: int, dim: int) -> np.ndarray:
    """Read a headered .f32 blob, checking magic, version, and payload size."""
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise BundleFormatError(f"{path.name}: missing file") from None
    if len(raw) < _HEADER.size:
        raise BundleFormatError(
            f"{path.name}: truncated header, {len(raw)} bytes at offset 0"
        )
    magic, version, reserved = _HEADER.unpack_from(raw)
    if magic != BLOB_MAGIC:
        raise BundleFormatError(f"{path.name}: bad magic {magic!r} at offset 0")
    if version != FORMAT_VERSION:
        raise BundleFormatError(
            f"{path.name}: version mismatch, got {version} at offset 4, "
            f"expected {FORMAT_VERSION}"
        )
    if reserved != 0:
        raise BundleFormatError(f"{path.name}: reserved field {reserved} at offset 6")
    payload = len(raw) - _HEADER.size
    expected = rows * dim * 4
    if payload < expected:
        raise BundleFormatError(
            f"{path.name}: truncated blob, payload {payload} bytes at offset 8, "
            f"expected {expected} ({rows} x {dim} float32)"
        )
    if payload > expected:
        raise BundleFormatError(
            f"{path.name}: dimension mismatch, payload {payload} bytes at offset 8 "
            f"does not match manifest shape {rows} x {dim} ({expected} bytes)"
        )
    flat = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(rows, dim).copy()


def save_bundle(bundle: EmbeddingBundle, path: str | Path) -> None:
    """Write ``bundle`` to a directory, creating it if needed."""
    bundle.validate()
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        n_test = 0 if bundle.test is None else bundle.test.shape[0]
        manifest = {
            "version": FORMAT_VERSION,
            "N": bundle.num_samples,
            "N_test": n_test,
            "d": bundle.dim,
            "C": bundle.num_classes,
            "M": bundle.descriptions_per_class,
            "class_names": bundle.catalog.class_names,
            "descriptions": bundle.catalog.descriptions,
            "owner": np.asarray(bundle.catalog.owner).tolist(),
            "flags": {"normalized": True},
        }
        if bundle.truth_train is not None:
            manifest["truth_train"] = np.asarray(bundle.truth_train).tolist()
        if bundle.truth_test is not None:
            manifest["truth_test"] = np.asarray(bundle.truth_test).tolist()
        (path / "manifest.json").write_text(
            json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
        )
        write_blob(path / "weak.f32", bundle.weak)
        write_blob(path / "strong.f32", bundle.strong)
        write_blob(path / "textdesc.f32", bundle.text_desc)
        write_blob(path / "z_init.f32", bundle.catalog.Z)
        if bundle.test is not None:
            write_blob(path / "test.f32", bundle.test)
    except OSError as exc:
        raise OSError(f"failed to write bundle at {path}: {exc}") from exc


def load_bundle(path: str | Path) -> EmbeddingBundle:
    """Load and validate a bundle directory.

    When the manifest's ``flags.normalized`` is false, rows are re-normalized
    on load; otherwise they must already be unit-norm.
    """
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise BundleFormatError(f"{manifest_path.name}: missing file in {path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"{manifest_path.name}: invalid JSON ({exc})") from exc

    version = manifest.get("version")
    if version != FORMAT_VERSION:
        raise BundleFormatError(
            f"{manifest_path.name}: version mismatch, got {version!r}, "
            f"expected {FORMAT_VERSION}"
        )
    try:
        n = int(manifest["N"])
        n_test = int(manifest["N_test"])
        d = int(manifest["d"])
        c = int(manifest["C"])
        m_per_class = int(manifest["M"])
        class_names = list(manifest["class_names"])
        descriptions = list(manifest["descriptions"])
        owner = np.asarray(manifest["owner"], dtype=np.int64)
        normalized = bool(manifest["flags"]["normalized"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"{manifest_path.name}: bad field ({exc})") from exc
    if len(class_names) != c:
        raise BundleFormatError(
            f"{manifest_path.name}: {len(class_names)} class_names for C={c}"
        )

    weak = read_blob(path / "weak.f32", n, d)
    strong = read_blob(path / "strong.f32", n, d)
    text_desc = read_blob(path / "textdesc.f32", len(descriptions), d)
    z = read_blob(path / "z_init.f32", c, d)
    test = read_blob(path / "test.f32", n_test, d) if n_test > 0 else None

    if not normalized:
        weak = normalize_rows(weak)
        strong = normalize_rows(strong)
        text_desc = normalize_rows(text_desc)
        z = normalize_rows(z)
        if test is not None:
            test = normalize_rows(test)

    truth_train = manifest.get("truth_train")
    truth_test = manifest.get("truth_test")
    bundle = EmbeddingBundle(
        weak=weak,
        strong=strong,
        text_desc=text_desc,
        catalog=ClassCatalog(class_names, descriptions, owner, z),
        test=test,
        truth_train=None if truth_train is None else np.asarray(truth_train, dtype=np.int64),
        truth_test=None if truth_test is None else np.asarray(truth_test, dtype=np.int64),
        descriptions_per_class=m_per_class,
    )
    try:
        bundle.validate()
    except ValidationError as exc:
        raise BundleFormatError(f"bundle at {path}: {exc}") from exc
    return bundle


def with_z(bundle: EmbeddingBundle, z: np.ndarray) -> EmbeddingBundle:
    """Return a copy of ``bundle`` whose catalog carries ``z`` as prototypes."""
    z = np.asarray(z, dtype=np.float32)
    check_embedding_matrix(z, "z")
    if z.shape != (bundle.num_classes, bundle.dim):
        raise ValidationError(
            f"z: expected shape ({bundle.num_classes}, {bundle.dim}), got {z.shape}"
        )
    catalog = ClassCatalog(
        bundle.catalog.class_names,
        bundle.catalog.descriptions,
        bundle.catalog.owner,
        z,
    )
    return replace(bundle, catalog=catalog)
