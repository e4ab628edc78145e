"""Exception hierarchy shared across the package."""


class AgglocError(Exception):
    """Base class for all package errors."""


class InvariantError(AgglocError):
    """A matrix or parameter violates a structural invariant."""


class ConfigError(AgglocError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(AgglocError):
    """Unreadable or inconsistent input data (CLI exit code 3)."""


class StageError(AgglocError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
