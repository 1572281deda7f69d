"""Exception types raised by the construction and verification routines."""


class LrlogitError(Exception):
    """Base class for all package-specific errors."""


class CardinalityTooLarge(LrlogitError):
    """Requested codebook size exceeds the existence guarantee.

    Raised when the McDiarmid failure-probability bound for the requested
    cardinality is >= 1 (no attempt can be certified to terminate).
    """


class ConstructionFailed(LrlogitError):
    """Randomized construction did not validate within ``max_attempts``."""

    def __init__(self, message, report=None, attempts=None):
        super().__init__(message)
        self.report = report
        self.attempts = attempts


class EmptyRange(LrlogitError):
    """No admissible scale epsilon exists for the given radius and rank."""


class DegenerateCardinality(LrlogitError):
    """A codebook cardinality bound fell below 2 (dimensions too small)."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values


class RankDeficient(LrlogitError):
    """Gram-Schmidt pre-columns were numerically linearly dependent."""
