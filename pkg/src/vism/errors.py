"""Exception hierarchy shared by all solver modules."""


class VismError(Exception):
    """Base class for all errors raised by this package."""


class InputError(VismError):
    """Malformed user input (molecule files, manifests, atom placement)."""


class ConfigError(VismError):
    """Inconsistent or out-of-range configuration (parameters, LJ tables)."""


class SolverError(VismError):
    """Linear or nonlinear solver failure.

    Carries the residual history of the failed solve in ``residuals``.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class NumericalError(VismError):
    """Non-finite values produced during time stepping or assembly."""


class StalePotentialError(VismError):
    """Electrostatic potential does not solve the equation for the given interface."""


class FitError(VismError):
    """Parameter fitting failed (degenerate dataset or diverging residuals)."""
