"""Tiny on-disk image dataset for demos and tests.

Two color classes ("red" and "green") with a handful of 64x64 PNGs each:
a dominant base color, mild per-pixel noise, and a darker rectangle so
crops and flips have visible structure. Deterministic for a given seed.
"""

from __future__ import annotations

import json
import numpy as np
from pathlib import Path

from PIL import Image

from .seeding import philox

FIXTURE_CLASSES = ("green", "red")
_BASE_RGB = {
    "red": (210, 40, 40),
    "green": (45, 185, 60),
}
TRAIN_PER_CLASS = 4
TEST_PER_CLASS = 2
IMAGE_SIZE = 64

DESCRIPTIONS = {
    "red": [
        "a photo of a red surface",
        "a bright red object",
        "a picture dominated by red color",
    ],
    "green": [
        "a photo of a green surface",
        "a green colored object",
    ],
}


def _render(rng: np.random.Generator, base: tuple[int, int, int]) -> Image.Image:
    img = np.empty((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.float64)
    img[:] = base
    img += rng.normal(0.0, 12.0, size=img.shape)
    x0, y0 = rng.integers(4, IMAGE_SIZE // 2, size=2)
    w, h = rng.integers(8, IMAGE_SIZE // 3, size=2)
    img[y0 : y0 + h, x0 : x0 + w] *= 0.55
    return Image.fromarray(np.clip(img, 0, 255).astype(np.uint8), mode="RGB")


def write_fixture(out_dir, seed: int = 0) -> Path:
    """Create the dataset tree plus descriptions.json and spec.json.

    Layout: out_dir/data/{train,test}/<class>/img_NN.png. Returns out_dir.
    """
    out = Path(out_dir)
    data = out / "data"
    counts = {"train": TRAIN_PER_CLASS, "test": TEST_PER_CLASS}
    for si, split in enumerate(("train", "test")):
        for ci, name in enumerate(FIXTURE_CLASSES):
            cdir = data / split / name
            cdir.mkdir(parents=True, exist_ok=True)
            for i in range(counts[split]):
                rng = philox((seed, si, ci, i))
                _render(rng, _BASE_RGB[name]).save(cdir / f"img_{i:02d}.png")
    (out / "descriptions.json").write_text(
        json.dumps(DESCRIPTIONS, indent=1, sort_keys=True)
    )
    spec = {
        "data_root": str(data),
        "descriptions": str(out / "descriptions.json"),
        "output_dir": str(out / "bundle"),
        "seed": seed,
    }
    (out / "spec.json").write_text(json.dumps(spec, indent=1, sort_keys=True))
    return out
