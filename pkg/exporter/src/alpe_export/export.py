"""Dataset scan, encoding, and bundle assembly."""

from __future__ import annotations

import numpy as np
from pathlib import Path

from PIL import Image

from .augment import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    VIEW_STRONG,
    VIEW_TEST,
    VIEW_WEAK,
    augment_once,
    build_recipe,
)
from .encoders import make_encoder
from .errors import ExportError
from .spec import ExportSpec, load_descriptions

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


def scan_split(data_root: Path, split: str) -> tuple[list[Path], np.ndarray, list[str]]:
    """Image paths, labels, and sorted class names for one split directory.

    Classes are the split's subdirectories in sorted order; images are
    sorted by name within each class, so row order never depends on the
    filesystem.
    """
    root = data_root / split
    if not root.is_dir():
        raise ExportError(f"missing dataset split directory: {root}")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ExportError(f"{root}: no class subdirectories")
    paths: list[Path] = []
    labels: list[int] = []
    for label, cdir in enumerate(class_dirs):
        files = sorted(
            p for p in cdir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not files:
            raise ExportError(f"{cdir}: no image files")
        paths.extend(files)
        labels.extend([label] * len(files))
    return paths, np.asarray(labels, dtype=np.int64), [p.name for p in class_dirs]


def _load_rgb(path: Path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except OSError as exc:
        raise ExportError(f"{path}: unreadable image ({exc})") from exc


def build_description_table(
    table: dict[str, list[str]], class_names: list[str]
) -> tuple[list[str], np.ndarray, int]:
    """Flatten per-class descriptions in class order.

    Returns (strings, owner array, max descriptions per class). Every class
    must be covered; extra entries in the file are ignored.
    """
    missing = [name for name in class_names if name not in table]
    if missing:
        raise ExportError(
            f"class-name mismatch: description file lacks {missing} "
            f"(classes come from the dataset directories)"
        )
    strings: list[str] = []
    owner: list[int] = []
    for label, name in enumerate(class_names):
        for desc in table[name]:
            strings.append(desc)
            owner.append(label)
    m_max = max(len(table[name]) for name in class_names)
    return strings, np.asarray(owner, dtype=np.int64), m_max


def class_prototypes(text_desc: np.ndarray, owner: np.ndarray, c: int) -> np.ndarray:
    """Unit-normalized per-class mean of description embeddings."""
    z = np.empty((c, text_desc.shape[1]), dtype=np.float64)
    desc64 = text_desc.astype(np.float64)
    for j in range(c):
        mean = desc64[owner == j].mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm < 1e-8:
            raise ExportError(f"class {j}: description mean collapsed to zero")
        z[j] = mean / norm
    return z.astype(np.float32)


def export(spec: ExportSpec):
    """Run the full export and return (bundle path, summary dict)."""
    from .store import write_bundle

    data_root = Path(spec.data_root)
    if not data_root.is_dir():
        raise ExportError(f"missing dataset: {data_root}")
    train_paths, truth_train, class_names = scan_split(data_root, spec.train_split)
    table = load_descriptions(spec.descriptions)
    strings, owner, m_max = build_description_table(table, class_names)

    encoder = make_encoder(spec.encoder)
    weak_recipe = build_recipe(spec.weak_recipe, spec.image_size)
    strong_recipe = build_recipe(spec.strong_recipe, spec.image_size)

    weak_imgs = []
    strong_imgs = []
    for i, path in enumerate(train_paths):
        img = _load_rgb(path)
        weak_imgs.append(
            augment_once(img, weak_recipe, spec.seed, SPLIT_TRAIN, i, VIEW_WEAK)
        )
        strong_imgs.append(
            augment_once(img, strong_recipe, spec.seed, SPLIT_TRAIN, i, VIEW_STRONG)
        )
    weak = encoder.encode_images(weak_imgs)
    strong = encoder.encode_images(strong_imgs)

    test = truth_test = None
    if spec.test_split:
        test_paths, truth_test, test_classes = scan_split(data_root, spec.test_split)
        if test_classes != class_names:
            raise ExportError(
                f"class-name mismatch between splits: {test_classes} vs {class_names}"
            )
        center = build_recipe("center", spec.image_size)
        test_imgs = [
            augment_once(_load_rgb(p), center, spec.seed, SPLIT_TEST, i, VIEW_TEST)
            for i, p in enumerate(test_paths)
        ]
        test = encoder.encode_images(test_imgs)

    text_desc = encoder.encode_texts(strings)
    z_init = class_prototypes(text_desc, owner, len(class_names))

    out = write_bundle(
        spec.output_dir,
        weak=weak,
        strong=strong,
        text_desc=text_desc,
        z_init=z_init,
        class_names=class_names,
        descriptions=strings,
        owner=owner,
        m_per_class=m_max,
        test=test,
        truth_train=truth_train,
        truth_test=truth_test,
    )
    summary = {
        "n_train": int(weak.shape[0]),
        "n_test": 0 if test is None else int(test.shape[0]),
        "num_classes": len(class_names),
        "dim": int(weak.shape[1]),
        "descriptions": len(strings),
        "encoder": spec.encoder,
    }
    return out, summary
