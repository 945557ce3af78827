"""Image dataset to embedding bundle exporter."""

from .errors import ExportError
from .export import export, scan_split
from .spec import ExportSpec, load_descriptions, load_spec
from .store import write_bundle

__all__ = [
    "ExportError",
    "ExportSpec",
    "export",
    "load_descriptions",
    "load_spec",
    "scan_split",
    "write_bundle",
]
