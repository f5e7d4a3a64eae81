"""Exception hierarchy shared across the package."""


class It2fisError(Exception):
    """Base class for all package errors."""


class DataError(It2fisError):
    """Input data violates a contract (bad CSV, empty result, shape mismatch)."""


class ModelError(It2fisError):
    """Model file is malformed, has an unknown version, or violates invariants."""


class NoCoverageError(It2fisError):
    """Every rule's upper firing strength is zero; no rule covers the input."""
