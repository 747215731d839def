"""Exception types shared across the package."""


class ExidError(Exception):
    """Base class for package errors."""


class TrainingError(ExidError):
    """A training run failed (divergence, non-finite loss, missed target)."""


class TreeError(ExidError):
    """A decision tree is structurally invalid for its environment."""


class TreeParseError(TreeError):
    """Tree / predicate DSL syntax error, carries line and column."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + loc)


class DatasetError(ExidError):
    """Dataset-level failure."""


class EmptyDatasetError(DatasetError):
    """An operation produced or received a dataset with no transitions."""


class DatasetParseError(DatasetError):
    """Malformed dataset file, carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        loc = f" (line {line})" if line is not None else ""
        super().__init__(message + loc)


class EnvMismatchError(ExidError):
    """Artifacts built for different environments were combined."""


class VerificationError(ExidError):
    """A reduced-buffer verification condition failed."""
