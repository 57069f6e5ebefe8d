class FinetuneServiceError(Exception):
    """Base class for this package's errors."""


class DataError(FinetuneServiceError):
    """Training data is missing, malformed, or carries an unknown label."""


class TrainingError(FinetuneServiceError):
    """Optimization failed, e.g. the loss went non-finite."""


class BundleError(FinetuneServiceError):
    """A model bundle directory is incomplete or unreadable."""
