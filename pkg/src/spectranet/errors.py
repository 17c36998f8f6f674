"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""


class SpectranetError(Exception):
    """Base class for all package errors."""


class ConfigError(SpectranetError):
    """Invalid or inconsistent configuration."""


class DataError(SpectranetError):
    """Invalid input data or on-disk artifact."""


class ShapeError(DataError):
    """Array dimensions do not satisfy an operation's contract."""


class FormatError(DataError):
    """Corrupt or truncated container file (bad magic, size, checksum)."""


class StratificationError(DataError):
    """A class has too few members to stratify as requested."""


class DegenerateRangeError(DataError):
    """Normalization range collapsed (max == min on the training fold)."""


class UndefinedAucError(DataError):
    """AUC requested on labels containing a single class."""


class NumericError(SpectranetError):
    """Numerical failure during optimization or statistics."""


class DivergenceError(NumericError):
    """Non-finite loss or gradient encountered while training."""


class SingularInputError(NumericError):
    """Zero-norm embedding fed to the margin loss (dead network)."""


class DegenerateVarianceError(NumericError):
    """Paired AUC comparison with zero variance but unequal AUCs."""
