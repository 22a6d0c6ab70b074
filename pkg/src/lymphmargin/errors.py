"""Exception types raised by the pipeline.

Every error carries its class name as a stable identifier; the CLI prints it
verbatim on standard error so scripts can match on it.
"""


class LymphMarginError(Exception):
    """Base class for all data errors raised by this package."""

    @property
    def name(self) -> str:
        return type(self).__name__


class InvalidAnnotation(LymphMarginError, ValueError):
    pass


class OutOfBounds(LymphMarginError, ValueError):
    pass


class InvalidScale(LymphMarginError, ValueError):
    pass


class InvalidMode(LymphMarginError, ValueError):
    pass


class InvalidMeta(LymphMarginError, ValueError):
    pass


class SingularStainMatrix(LymphMarginError, ValueError):
    pass


class InvalidStainMatrix(LymphMarginError, ValueError):
    pass


class ShapeMismatch(LymphMarginError, ValueError):
    pass


class DegenerateLabels(LymphMarginError, ValueError):
    pass


class InsufficientSupport(LymphMarginError, ValueError):
    pass


class EmptySeries(LymphMarginError, ValueError):
    pass


class InvalidValue(LymphMarginError, ValueError):
    pass


class BandInfeasible(LymphMarginError, ValueError):
    pass


class InvalidPairing(LymphMarginError, ValueError):
    pass


class GeometryTooSmall(LymphMarginError, ValueError):
    pass


class InvalidProfile(LymphMarginError, ValueError):
    pass


class FileNotFound(LymphMarginError, FileNotFoundError):
    pass


class InvalidFile(LymphMarginError, ValueError):
    pass
