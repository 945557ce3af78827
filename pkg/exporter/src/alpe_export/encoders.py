"""Image/text encoder registry.

An encoder maps PIL images and description strings into one shared
embedding space, returning unit-norm float32 rows. Two entries ship:

    color-proj     weightless deterministic stand-in: pixel statistics on
                   the image side, named-color lookup on the text side,
                   both through one fixed random projection. Needs no
                   downloads, so tests and fixtures run anywhere.
    clip-vit-b32   the real pretrained vision-language model, via the
                   transformers package. Requires cached weights; it fails
                   with a clear message when they are unavailable.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ExportError

# swatches for the text side of the weightless encoder (0..1 RGB)
_COLOR_WORDS = {
    "red": (0.86, 0.16, 0.16),
    "green": (0.18, 0.74, 0.25),
    "blue": (0.17, 0.32, 0.85),
    "yellow": (0.90, 0.86, 0.20),
    "orange": (0.95, 0.58, 0.12),
    "purple": (0.55, 0.20, 0.75),
    "magenta": (0.85, 0.20, 0.75),
    "cyan": (0.15, 0.80, 0.82),
    "white": (0.95, 0.95, 0.95),
    "black": (0.08, 0.08, 0.08),
    "gray": (0.50, 0.50, 0.50),
    "grey": (0.50, 0.50, 0.50),
    "brown": (0.55, 0.36, 0.18),
}

_RAW_DIM = 6  # mean RGB + per-channel spread


class ColorProjectionEncoder:
    """Deterministic toy joint space built on color statistics.

    Images embed as (mean RGB, std RGB) in [0, 1]; texts embed as the mean
    swatch of any recognized color words (neutral gray when none appear)
    with a fixed nominal spread. Both go through the same frozen Gaussian
    projection, so image-text cosine reflects color agreement. A stand-in
    for a real vision-language encoder, not a model of one.
    """

    name = "color-proj"

    def __init__(self, dim: int = 16):
        if dim < 2:
            raise ExportError(f"encoder dim must be >= 2, got {dim}")
        self.dim = dim
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((0xA1BE, 0, 0, 0)))
        )
        self._proj = rng.standard_normal((_RAW_DIM, dim)) / np.sqrt(_RAW_DIM)

    def _project(self, raw: np.ndarray) -> np.ndarray:
        out = raw.astype(np.float64) @ self._proj
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        if (norms < 1e-12).any():
            raise ExportError("degenerate feature row (projection collapsed)")
        return (out / norms).astype(np.float32)

    def encode_images(self, images) -> np.ndarray:
        raw = np.empty((len(images), _RAW_DIM))
        for i, img in enumerate(images):
            px = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
            raw[i, :3] = px.mean(axis=(0, 1))
            raw[i, 3:] = px.std(axis=(0, 1))
        return self._project(raw)

    def encode_texts(self, texts) -> np.ndarray:
        raw = np.empty((len(texts), _RAW_DIM))
        for i, text in enumerate(texts):
            words = re.findall(r"[a-z]+", text.lower())
            hits = [_COLOR_WORDS[w] for w in words if w in _COLOR_WORDS]
            rgb = np.mean(hits, axis=0) if hits else np.array([0.5, 0.5, 0.5])
            raw[i, :3] = rgb
            raw[i, 3:] = 0.1  # nominal spread, shared by all texts
        return self._project(raw)


class ClipEncoder:  # pragma: no cover - needs downloaded pretrained weights
    """openai/clip-vit-base-patch32 through the transformers package."""

    name = "clip-vit-b32"
    _MODEL = "openai/clip-vit-base-patch32"

    def __init__(self):
        try:
            from transformers import CLIPModel, CLIPProcessor

            self._model = CLIPModel.from_pretrained(self._MODEL)
            self._proc = CLIPProcessor.from_pretrained(self._MODEL)
        except Exception as exc:
            raise ExportError(
                f"encoder {self.name!r} needs the pretrained weights for "
                f"{self._MODEL} (transformers cache); they are not available "
                f"here: {exc}"
            ) from exc
        self._model.eval()
        self.dim = int(self._model.config.projection_dim)

    def _normalized(self, t) -> np.ndarray:
        import torch

        with torch.no_grad():
            t = t / t.norm(dim=-1, keepdim=True)
        return t.cpu().numpy().astype(np.float32)

    def encode_images(self, images) -> np.ndarray:
        import torch

        inputs = self._proc(images=list(images), return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return self._normalized(feats)

    def encode_texts(self, texts) -> np.ndarray:
        import torch

        inputs = self._proc(text=list(texts), return_tensors="pt", padding=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return self._normalized(feats)


ENCODERS = {
    ColorProjectionEncoder.name: ColorProjectionEncoder,
    ClipEncoder.name: ClipEncoder,
}


def make_encoder(name: str):
    if name not in ENCODERS:
        raise ExportError(
            f"unknown encoder {name!r}, expected one of {sorted(ENCODERS)}"
        )
    return ENCODERS[name]()
