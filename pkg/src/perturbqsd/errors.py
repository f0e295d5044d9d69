"""Exception hierarchy shared by every module of the package."""


class QsdError(Exception):
    """Base class for all errors raised by perturbqsd."""


class UsageError(QsdError, ValueError):
    pass


class BackendError(QsdError):
    """An operation cannot be carried out exactly in the requested backend."""


class ModelError(QsdError, ValueError):
    """Malformed or non-stochastic model input."""


class EvaluationError(QsdError):
    pass


class SingularMatrixError(QsdError, ZeroDivisionError):
    pass


class SupercriticalError(QsdError):
    """The taboo system has spectral radius >= 1 at the requested rho."""


class NoReturnError(QsdError):
    pass


class DegenerateError(QsdError):
    pass


class OrderError(QsdError):
    """The model does not carry enough perturbation data for the requested order."""


class HorizonError(QsdError):
    def __init__(self, message, last_snapshot=None):
        super().__init__(message)
        self.last_snapshot = last_snapshot


class InconsistencyError(QsdError, AssertionError):
    """Two independent computation routes disagree."""


class ConditionError(ModelError):
    """The limiting model violates the communication or non-periodicity conditions."""
