"""Exception types raised across the package."""


class PeanoError(Exception):
    """Base class for all package errors."""


class DomainError(PeanoError, ValueError):
    pass


class OrderError(PeanoError, ValueError):
    pass


class SingularQuotientError(PeanoError, ZeroDivisionError):
    pass


class SupportError(PeanoError, ValueError):
    pass


class NoSuccessorError(PeanoError, ValueError):
    pass


class InvalidWordError(PeanoError, ValueError):
    pass


class BudgetError(PeanoError, RuntimeError):
    pass


class DepthError(PeanoError, ValueError):
    pass


class OutOfLuneError(PeanoError, ValueError):
    pass


class ConfigError(PeanoError, ValueError):
    pass
