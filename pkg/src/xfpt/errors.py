"""Exception hierarchy shared by the library and the command line."""


class XfptError(Exception):
    """Base class for all package errors."""


class ValidationError(XfptError, ValueError):
    """A network or query violates a standing assumption.

    ``report`` holds the :class:`~xfpt.network.ValidationReport` when the
    error came out of :func:`~xfpt.network.validate`.
    """

    def __init__(self, message, report=None, code="invalid"):
        super().__init__(message)
        self.report = report
        self.code = code


class ModeError(ValidationError):
    """Operation is not available for the network's mode."""

    def __init__(self, message):
        super().__init__(message, code="mode_not_supported")


class NumericalError(XfptError, ArithmeticError):
    """Quadrature or series evaluation failed, or a quantity is infinite."""

    def __init__(self, message, code="numerical_failure"):
        super().__init__(message)
        self.code = code


class SimulationError(NumericalError):
    """A Monte Carlo run cannot produce a finite answer."""

    def __init__(self, message, code="simulation_failure"):
        super().__init__(message, code=code)
