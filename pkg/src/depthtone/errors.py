"""Exception types raised by the depthtone library."""


class DepthToneError(Exception):
    """Base class for all depthtone errors."""


class EmptyGrid(DepthToneError):
    """A depth grid (or extracted block) contains no valid pixels."""


class EmptyImage(DepthToneError):
    """An LDR image contains no valid pixels."""


class IndexOutOfRange(DepthToneError):
    """Level indices fall outside the histogram's [0, N] range."""


class Infeasible(DepthToneError):
    """No mapping satisfies the requested (N, K, tau) combination."""


class InvalidTau(DepthToneError):
    """The span bound tau is not a positive integer."""


class TooLarge(DepthToneError):
    """Instance exceeds the exhaustive-search guard of the oracle."""


class MismatchedN(DepthToneError):
    """A mapping function's input range does not match the histogram."""


class LengthMismatch(DepthToneError):
    """A query vector's length does not match the channel count."""


class TooFewMaps(DepthToneError):
    """The attention loss needs at least two maps."""


class BadSizes(DepthToneError):
    """Crop size and input size are inconsistent."""


class MalformedFile(DepthToneError):
    """An input file could not be parsed."""
