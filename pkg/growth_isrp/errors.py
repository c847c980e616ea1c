"""
errors

Exception hierarchy for growth_isrp.

Every error raised by the package derives from GrowthIsrpError and belongs to one of three
branches. The branch decides the exit code used by the command-line front end:

    ConfigError     -> 2  (bad configuration, unsupported request)
    DataError       -> 3  (input data that cannot be used as given)
    NumericalError  -> 4  (the computation itself failed)

Usage:
    from growth_isrp.errors import DomainError

    if params["x0"] <= 0:
        raise DomainError("x0 must be positive")
"""


class GrowthIsrpError(Exception):
    """Base class of every error raised by growth_isrp."""

    exit_code: int = 4


class ConfigError(GrowthIsrpError):
    """Invalid configuration or an operation requested on an entry that cannot provide it."""

    exit_code = 2


class DataError(GrowthIsrpError):
    """Input data violate a structural requirement (shape, spacing, sign)."""

    exit_code = 3


class NumericalError(GrowthIsrpError):
    """A numerical procedure could not produce a value."""

    exit_code = 4


class UnsupportedClosedForm(ConfigError):
    """size() was requested for a catalog entry that only has an ODE right-hand side."""


class DomainError(NumericalError, ValueError):
    """Parameters or arguments fall outside the region where a formula is defined."""


class NumericalBlowup(NumericalError):
    """The integrated state left the open interval (0, overflow bound)."""


class NonPositiveLogArgument(NumericalError):
    """The logarithm inside an ISRP estimator received a non-positive argument."""


class DegenerateDenominator(NumericalError):
    """A denominator of an estimator or of its gradient is zero."""


class NonPositiveBase(NumericalError):
    """A fractional power of a non-positive number would be required."""


class SingularJacobian(NumericalError):
    """The damped normal equations of a least-squares step could not be solved."""


class NoConvergence(NumericalError):
    """The least-squares iteration reached its cap without meeting a stopping rule."""


class EmptyProfile(NumericalError):
    """Too few ISRP intervals survived to fit a rate form."""


class DimensionMismatch(DataError, ValueError):
    """Arrays passed together do not have compatible shapes."""


class WindowTooLarge(DataError):
    """A moving-average window is longer than the series."""


class NonPositiveValue(DataError):
    """A value that must be logged is zero or negative."""


class NonUniformGrid(DataError):
    """Time points are not equally spaced."""
