"""Exception types raised across the package."""


class RabisweepError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(RabisweepError):
    """A physical parameter is out of range or non-finite."""


class InvalidTruncationError(InvalidParameterError):
    """Fock truncation below the minimum usable size."""


class InsufficientTruncationError(RabisweepError):
    """The truncated space is too small to hold the requested state or run."""


class SymmetryViolationError(RabisweepError):
    """A matrix required to be Hermitian is not."""


class NumericalInstabilityError(RabisweepError):
    """Norm or conservation drift beyond the allowed budget during a run."""


class ResourceLimitError(RabisweepError):
    """A configured dimension or size cap would be exceeded."""


class DegenerateCrossingError(RabisweepError):
    """Coincident avoided crossings: the sequential-transition picture does not apply."""


class GapTruncationError(RabisweepError):
    """Too few crossings retained for the requested cascade accuracy."""
