"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ParseError`` -> 1, ``InputError``
subclasses -> 2, ``NumericalError`` subclasses -> 3.
"""


class CarlesonError(Exception):
    """Base class for every error raised by this package."""


class ParseError(CarlesonError, ValueError):
    """A spec document is not well-formed or misses required fields."""


class InputError(CarlesonError, ValueError):
    """An argument violates a documented invariant."""


class InvariantViolation(InputError):
    pass


class InvalidHeight(InputError):
    pass


class InvalidDecay(InputError):
    pass


class InvalidGrid(InputError):
    pass


class InvalidParameters(InputError):
    pass


class EmptyMeasure(InputError):
    pass


class EmptySystem(InputError):
    pass


class EmptyFamily(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class ExponentOrder(InputError):
    pass


class SectorViolation(InputError):
    pass


class DivergentParameters(InputError):
    """The dyadic ring sum diverges for the requested exponent."""


class NumericalError(CarlesonError, ArithmeticError):
    pass


class NonConvergence(NumericalError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance.

    ``partial`` holds the last :class:`~carleson.numerics.IntegralResult`
    when one is available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BesselOverflow(NumericalError, OverflowError):
    pass
