"""Deterministic weak/strong augmentation pipelines.

Each image gets exactly one fixed augmentation sample per view, not a fresh
draw per epoch: the torch RNG is re-seeded per (run seed, split, image
index, view) before the transform runs, so re-exports are bit-identical and
downstream training stays deterministic.

Recipes:

    weak    resize-crop          resize, then a random crop
    strong  rrc-flip-randaug     random resized crop, horizontal flip,
                                 RandAugment
    both    center               resize + center crop, no randomness
                                 (always used for the test split)
"""

from __future__ import annotations

import numpy as np
import torch
from torchvision import transforms

from .errors import ExportError

VIEW_WEAK = 0
VIEW_STRONG = 1
VIEW_TEST = 2

SPLIT_TRAIN = 0
SPLIT_TEST = 1


def build_recipe(name: str, image_size: int):
    """PIL-to-PIL transform for a recipe identifier."""
    pad = max(2, image_size // 8)
    if name == "resize-crop":
        return transforms.Compose(
            [
                transforms.Resize(image_size + pad),
                transforms.RandomCrop(image_size),
            ]
        )
    if name == "rrc-flip-randaug":
        return transforms.Compose(
            [
                transforms.RandomResizedCrop(image_size, scale=(0.5, 1.0)),
                transforms.RandomHorizontalFlip(),
                transforms.RandAugment(),
            ]
        )
    if name == "center":
        return transforms.Compose(
            [
                transforms.Resize(image_size),
                transforms.CenterCrop(image_size),
            ]
        )
    raise ExportError(f"unknown augmentation recipe {name!r}")


def view_seed(seed: int, split: int, index: int, view: int) -> int:
    """Torch seed for one (image, view) draw, stable across runs."""
    state = np.random.SeedSequence((seed, split, index, view)).generate_state(1)[0]
    return int(state) & 0x7FFF_FFFF_FFFF_FFFF


def augment_once(img, recipe, seed: int, split: int, index: int, view: int):
    """Apply ``recipe`` to ``img`` under the keyed per-view seed."""
    torch.manual_seed(view_seed(seed, split, index, view))
    return recipe(img)
