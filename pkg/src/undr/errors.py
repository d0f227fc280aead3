"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class UndrError(Exception):
    """Base class for all engine errors."""


class InvalidAttribute(UndrError):
    """Raw attribute value does not match the facet kind (e.g. text in a numeric facet)."""


class SchemaError(UndrError):
    """A facet schema violates its structural invariants."""


class FormatError(UndrError):
    """A data file declares an unsupported or mismatched format_version."""


class IoError(UndrError):
    """A data stream could not be read."""


class UnknownBin(UndrError):
    """A selection references a bin id that does not exist in the schema."""


class EmptyPool(UndrError):
    """Weight computation was asked to run over zero records."""


class SchemaMismatch(UndrError):
    """A weight table and a schema disagree on the facet set."""


class MissingRatings(UndrError):
    """Rating-based ranking hit a product with zero ratings."""


class DegenerateSample(UndrError):
    """A statistical test received a sample it cannot test (e.g. all-zero differences)."""


class InfeasibleSpec(UndrError):
    """A synthetic pool spec asks for counts that cannot be realised."""


class CatalogMismatch(UndrError):
    """Two ranked lists do not cover the same set of products."""


class BelowMinPool(UndrError):
    """Weight recomputation refused: not enough finalized records yet."""

    def __init__(self, count: int, min_pool: int) -> None:
        super().__init__(f"only {count} finalized records, need at least {min_pool}")
        self.count = count
        self.min_pool = min_pool
