"""Exception hierarchy shared by all aerialqc modules.

Every error raised for a violated physical precondition derives from
``ValueError`` so that callers which only care about "bad input" can
catch that, while the CLI maps the ``category`` attribute to exit codes.
"""


class AerialQCError(Exception):
    """Base class for all library errors."""

    category = "module"


class InputError(AerialQCError, ValueError):
    category = "config"


class AltitudeOutOfRange(InputError):
    pass


class NonPositiveWavenumber(InputError):
    pass


class ZeroDistance(InputError):
    pass


class InvalidGeometry(InputError):
    pass


class FactorOutOfRange(InputError):
    pass


class NegativeVariance(InputError):
    pass


class NonPositiveGeometry(InputError):
    pass


class EmptyInput(InputError):
    pass


class MalformedRecord(InputError):
    """A visibility record failed validation.

    ``row`` is the zero-based index of the offending record in the input.
    """

    def __init__(self, row, message):
        super().__init__(f"row {row}: {message}")
        self.row = row


class InvalidState(InputError):
    pass


class InvalidTopology(InputError):
    pass


class NonNormalizedReference(InputError):
    pass


class NumericalError(AerialQCError, ArithmeticError):
    category = "numeric"


class QuadratureFailure(NumericalError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, tolerance=None, achieved=None):
        if tolerance is not None:
            message = f"{message} (requested rtol={tolerance:g}, achieved={achieved:g})"
        super().__init__(message)
        self.tolerance = tolerance
        self.achieved = achieved


class NonPositiveDefiniteCovariance(NumericalError):
    pass


class RegimeWarning(UserWarning):
    """An approximation is being used outside its intended regime."""


class ValidityRangeWarning(UserWarning):
    """Inputs fall outside the parameter range a model was tabulated for."""
