"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when input data is malformed, misaligned, or has gaps."""


class CalibrationError(RuntimeError):
    """Raised when a parameter fit cannot be carried out (e.g. an
    unidentifiable loss surface)."""


class DegenerateProblemError(ValueError):
    """Raised when an optimization problem has no well-defined solution,
    e.g. a contract pair with equal times to maturity or a vanishing
    denominator in a closed-form solution."""


class VolatilitySingularityError(ZeroDivisionError):
    """Raised when the local volatility evaluates to zero where a division
    by it is required."""
