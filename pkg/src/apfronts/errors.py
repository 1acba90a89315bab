"""Exception hierarchy shared by all modules."""


class APFrontsError(Exception):
    """Base class; carries an optional machine-readable payload."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ArgumentError(APFrontsError, ValueError):
    pass


class RangeError(APFrontsError, ValueError):
    pass


class ConvergenceError(APFrontsError, RuntimeError):
    pass


class SolverError(APFrontsError, RuntimeError):
    pass


class DiscretizationError(APFrontsError, RuntimeError):
    pass


class SchemeError(APFrontsError, RuntimeError):
    pass


class DomainError(APFrontsError, RuntimeError):
    pass
