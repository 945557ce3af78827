"""Exception type shared across the exporter."""


class ExportError(ValueError):
    """Raised when an export spec, dataset, or description file is unusable."""
