"""Exception hierarchy for l4dict.

Everything raised on a domain failure derives from :class:`L4DictError`,
which is what the CLI maps to exit code 1.
"""


class L4DictError(Exception):
    """Base class for all l4dict domain errors."""


class DimensionMismatchError(L4DictError):
    """Operand shapes are incompatible."""


class NonFiniteError(L4DictError):
    """A matrix contains NaN or infinite entries."""


class OrthogonalityError(L4DictError):
    """A matrix required to be orthogonal fails its certification tolerance."""


class NonConvergenceError(L4DictError):
    """The SVD backend failed to converge (pathological input)."""


class RankDeficientError(L4DictError):
    """Smallest singular value is below threshold; the operation is ill-defined."""


class InvalidParameterError(L4DictError, ValueError):
    """A scalar parameter is outside its documented range."""


class MatrixFormatError(L4DictError):
    """A matrix text file does not follow the documented layout."""


class BadMagicError(L4DictError):
    """An IDX file does not start with the expected magic number."""


class TruncatedFileError(L4DictError):
    """An IDX file ends before the payload promised by its header."""


class DimensionOverflowError(L4DictError):
    """IDX header dimensions are zero or implausibly large."""


class ZeroVarianceError(L4DictError):
    """Data has no variance after centering; principal directions are undefined."""
