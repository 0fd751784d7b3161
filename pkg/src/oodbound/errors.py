"""Exception types shared across the package."""


class OodboundError(Exception):
    """Base class for all errors raised by this package."""


class DataError(OodboundError):
    """Invalid input data: bad files, shape mismatches, impossible configurations."""


class NumericError(OodboundError):
    """Numerical failure: non-finite losses, degenerate (zero-norm) projections."""
