"""Exception types shared across the package."""


class IrtcalibError(Exception):
    """Base class for all package errors."""


class ParameterError(IrtcalibError, ValueError):
    """A value is outside its mathematical domain; message names the field."""


class EmptyRequestError(IrtcalibError, ValueError):
    """A sample of size zero (or an empty input collection) was requested."""


class ConfigurationError(IrtcalibError, ValueError):
    """Fields are individually valid but the combination is not."""


class IngestionError(IrtcalibError):
    """A data file is missing, unreadable, or malformed."""


class InsufficientDataError(IrtcalibError, ValueError):
    """Fewer observations than the operation mathematically requires."""


class DegenerateInputError(IrtcalibError, ValueError):
    """Input has no variation where variation is required."""


class NumericalError(IrtcalibError, ArithmeticError):
    """A numerical routine produced non-finite values or failed to converge."""


class DivergedObjectiveError(NumericalError):
    """The stochastic objective became infinite (information underflow)."""


class FeasibilityWarning(UserWarning):
    """Requested target lies outside the attainable reliability bracket."""
