"""Exception hierarchy; CLI exit codes hang off these classes."""


class ZnQedError(Exception):
    exit_code = 2


class ConfigurationError(ZnQedError, ValueError):
    exit_code = 1


class DomainError(ZnQedError, ValueError):
    exit_code = 1


class ContractViolation(ZnQedError, ValueError):
    exit_code = 1


class NumericalFailure(ZnQedError, ArithmeticError):
    exit_code = 2

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotEstimable(ZnQedError, ValueError):
    """Requested quantity cannot be extracted from the data (e.g. too few peaks)."""

    exit_code = 2
