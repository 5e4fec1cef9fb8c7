class LinkSimError(Exception):
    """Base class for every error raised by the link simulator."""


class ConfigurationError(LinkSimError, ValueError):
    """A configuration value or a domain type invariant is violated."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class DimensionError(LinkSimError, ValueError):
    """Lengths, sizes or tensor shapes do not match what an operation needs."""


class EstimationError(LinkSimError, ArithmeticError):
    """An estimator has no defined answer for its input."""


class ModelFileError(LinkSimError, IOError):
    """A model, dataset or CSV file is malformed, truncated or of another version."""


class MissingModelError(LinkSimError, FileNotFoundError):
    """A CNN run was requested but its trained model file is not there."""
