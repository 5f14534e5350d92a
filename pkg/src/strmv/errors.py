"""Exception types shared across the package."""


class StrmvError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(StrmvError):
    """Malformed input data: ragged rows, unparseable cells."""


class DimensionError(StrmvError):
    """Shape or size constraint violated."""


class ArgumentError(StrmvError, ValueError):
    """Parameter outside its documented range."""


class NumericError(StrmvError):
    """Non-finite values or numerical breakdown during computation."""


class DegenerateSpectrumError(NumericError):
    """Spectrum is identically zero where a positive leading value is required."""


class InfeasibleTargetError(StrmvError):
    """Return target exceeds what any portfolio in the simplex can attain."""


class ProjectionFailureError(NumericError):
    """Projection onto the feasible set did not converge within its budget."""
