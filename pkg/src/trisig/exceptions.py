"""Exception and warning classes raised across trisig."""


class TrisigError(Exception):
    """Base class for all trisig errors."""


class MissingDataError(TrisigError):
    """A tricluster covers a missing cell."""


class ParseError(TrisigError):
    """Malformed input file. ``locus`` names the offending line or record."""

    def __init__(self, message, locus=None):
        self.locus = locus
        if locus is not None:
            message = f"{locus}: {message}"
        super().__init__(message)


class DomainMismatchError(TrisigError):
    """A value lies outside the declared domain of its variable."""


class EmptySupportError(TrisigError):
    """A probability was requested over a slice with no observed data."""


class UnsupportedProfileError(TrisigError):
    """The assumption profile is not applicable to the data or tricluster."""


class PlantingConflictError(TrisigError):
    """Planted triclusters could not be placed without contradicting cells."""


class SearchSpaceTooLargeError(TrisigError):
    """Exhaustive mining would exceed the configured enumeration budget."""


class NonConstantCellWarning(UserWarning):
    """A tricluster block is not constant across its observations."""


class DegenerateVariableWarning(UserWarning):
    """A variable collapsed to a single category."""


class EmptySegmentWarning(UserWarning):
    """A PAA segment held only missing values."""


class InsufficientSupportWarning(UserWarning):
    """Expected counts too small for a chi-square comparison."""


class ZeroProbabilityWarning(UserWarning):
    """A null-model factor has empirical probability zero."""
