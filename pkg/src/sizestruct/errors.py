"""Exception hierarchy shared by all modules."""


class SizeStructError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SizeStructError, ValueError):
    """A size argument lies outside ``[0, m]``."""


class ConfigError(SizeStructError, ValueError):
    """Invalid parameters, grid, or configuration document."""


class NumericalError(SizeStructError, ArithmeticError):
    """A computation produced non-finite values or failed to converge."""


class StepError(NumericalError):
    """A time step violates the CFL or positivity restriction."""


class NoRootError(NumericalError):
    """No sign change of the characteristic function could be bracketed."""


class ConvergenceError(NumericalError):
    """An iteration hit its cap before meeting the tolerance."""


class ExtinctError(NumericalError):
    """Total mass vanished inside the fitting window.

    ``rate`` is ``-inf`` so callers that want a sentinel can read it off the
    exception instead of aborting.
    """

    def __init__(self, message, rate=float("-inf")):
        super().__init__(message)
        self.rate = rate
