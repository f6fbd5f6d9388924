"""Exception hierarchy.

Validation errors are caller mistakes (bad input, bad configuration).
Numerical errors mean a computation could not meet its tolerance.
The CLI maps them to exit status 1 and 2 respectively.
"""


class PoincareError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PoincareError, ValueError):
    """Raised when an argument or input file is invalid."""

    def __init__(self, msg, field=None):
        if field is not None:
            msg = f"{field}: {msg}"
        super().__init__(msg)
        self.field = field


class NumericalError(PoincareError, ArithmeticError):
    """Raised when a numerical stage fails to converge or overflows."""

    def __init__(self, msg, stage=None):
        if stage is not None:
            msg = f"[{stage}] {msg}"
        super().__init__(msg)
        self.stage = stage


class AtomCapError(NumericalError):
    """Convolution would produce more atoms than the configured cap."""

    def __init__(self, count, cap):
        super().__init__(f"convolution produces {count} atoms, cap is {cap}", stage="convolve")
        self.count = count
        self.cap = cap


class QuadratureError(NumericalError):
    """Adaptive quadrature hit its refinement limit before meeting tolerance."""


class WindowError(ValidationError):
    """The computational window is too narrow for the mixture."""
