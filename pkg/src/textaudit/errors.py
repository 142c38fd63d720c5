"""Exception types shared across the audit toolkit."""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all audit-specific failures."""


class DatasetError(AuditError):
    """Malformed or unreadable dataset input.

    ``line`` is the 1-based physical line of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LexiconError(AuditError):
    """Invalid word-resource file (lexicon, gazetteer, word list, templates)."""


class EmbeddingError(AuditError):
    """Invalid embedding file or vector operation."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyPartitionError(AuditError):
    """A label partition required for a frequency denominator is empty."""

    def __init__(self, partition: str):
        super().__init__(f"partition {partition!r} is empty, cannot compute percentages")
        self.partition = partition


class CoverageError(AuditError):
    """Predictions do not cover the corpus under audit."""


class AdapterError(AuditError):
    """Base for failures while talking to the model under audit."""


class AdapterUnavailableError(AdapterError):
    """The adapter could not be reached; retryable."""


class AdapterProtocolError(AdapterError):
    """The adapter answered but violated the wire contract; not retryable."""


class ExplainError(AuditError):
    """Explanation could not be computed for the given inputs."""


class ConfigError(AuditError):
    """Invalid audit configuration."""
