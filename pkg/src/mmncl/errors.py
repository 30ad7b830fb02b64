"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MMNCLError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MMNCLError):
    """Invalid or inconsistent configuration values."""


class IngestionError(MMNCLError):
    """A dataset directory is missing or mismatched files for a stay."""


class ParseError(MMNCLError):
    """A data file contains a malformed row; message names the row."""


class ValidationError(MMNCLError):
    """Well-formed input that violates a documented contract."""


class ShapeError(MMNCLError):
    """Tensor or matrix dimensions do not match the declared interface."""


class DegenerateEmbeddingError(MMNCLError):
    """A projected representation collapsed to (near-)zero norm."""


class BatchAssemblyError(MMNCLError):
    """Not enough eligible notes to assemble a contrastive batch."""


class NonFiniteLossError(MMNCLError):
    """Training loss became NaN/Inf; carries the offending batch indices."""

    def __init__(self, message: str, batch_indices=None):
        super().__init__(message)
        self.batch_indices = tuple(batch_indices) if batch_indices is not None else ()
