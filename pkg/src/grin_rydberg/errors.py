"""Exception hierarchy shared by all grin_rydberg modules."""


class GrinRydbergError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GrinRydbergError, ValueError):
    """An argument lies outside the domain where the model is defined."""


class ConfigurationError(GrinRydbergError, ValueError):
    """A spec or run configuration violates its invariants."""


class UnrealizableIndexError(DomainError):
    """The requested effective index cannot be built from the chosen material."""


class InsufficientBundleError(DomainError):
    pass


class SingularDistanceError(DomainError):
    """Observation point coincides with a radiating aperture patch."""


class UnresolvedDoubletError(GrinRydbergError):
    """Fewer than two peaks could be resolved in an EIT spectrum.

    ``peak_position`` carries the detuning of the single detected peak
    (``None`` if no peak was found at all).
    """

    def __init__(self, message, peak_position=None):
        super().__init__(message)
        self.peak_position = peak_position


class DataError(GrinRydbergError, ValueError):
    """Input data is well-formed but semantically invalid (e.g. duplicates)."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
