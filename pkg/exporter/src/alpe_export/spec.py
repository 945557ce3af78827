"""Export job description, loaded from JSON.

The dataset is an image-folder tree: ``data_root/<split>/<class_name>/*``,
one subdirectory per class. The description file is JSON mapping every class
name to a non-empty list of description strings; classes may carry different
numbers of descriptions.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ExportError

WEAK_RECIPES = ("resize-crop", "center")
STRONG_RECIPES = ("rrc-flip-randaug", "center")


@dataclass(frozen=True)
class ExportSpec:
    data_root: str
    descriptions: str
    output_dir: str
    train_split: str = "train"
    test_split: str | None = "test"
    weak_recipe: str = "resize-crop"
    strong_recipe: str = "rrc-flip-randaug"
    encoder: str = "color-proj"
    image_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.data_root or not self.descriptions or not self.output_dir:
            raise ExportError("data_root, descriptions and output_dir are required")
        if not self.train_split:
            raise ExportError("train_split must be a non-empty directory name")
        if self.weak_recipe not in WEAK_RECIPES:
            raise ExportError(
                f"unknown weak recipe {self.weak_recipe!r}, expected one of {WEAK_RECIPES}"
            )
        if self.strong_recipe not in STRONG_RECIPES:
            raise ExportError(
                f"unknown strong recipe {self.strong_recipe!r}, "
                f"expected one of {STRONG_RECIPES}"
            )
        if self.image_size < 8:
            raise ExportError(f"image_size must be >= 8, got {self.image_size}")
        if self.seed < 0:
            raise ExportError(f"seed must be >= 0, got {self.seed}")


def load_spec(path: str | Path) -> ExportSpec:
    """Parse a spec file, rejecting unknown fields."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ExportError(f"{path}: expected a JSON object")
    known = {f.name for f in dataclasses.fields(ExportSpec)}
    unknown = set(raw) - known
    if unknown:
        raise ExportError(f"unknown spec fields: {sorted(unknown)}")
    try:
        return ExportSpec(**raw)
    except TypeError as exc:
        raise ExportError(f"bad spec file: {exc}") from exc


def load_descriptions(path: str | Path) -> dict[str, list[str]]:
    """Class-name to description-list mapping, with shape checks only.

    Coverage against the dataset's classes is checked at export time, once
    the class list is known.
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or not raw:
        raise ExportError(f"{path}: expected a non-empty JSON object")
    table: dict[str, list[str]] = {}
    for name, descs in raw.items():
        if not isinstance(descs, list) or not descs:
            raise ExportError(f"{path}: class {name!r} needs a non-empty list")
        if any(not isinstance(s, str) or not s.strip() for s in descs):
            raise ExportError(f"{path}: class {name!r} has a blank description")
        table[str(name)] = [str(s) for s in descs]
    return table
