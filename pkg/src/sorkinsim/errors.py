"""Exception hierarchy shared by all modules.

Every exception maps onto one CLI exit code through ``exit_code``.
"""


class SorkinSimError(Exception):
    exit_code = 1


class DomainError(SorkinSimError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 3


class ValidityError(DomainError):
    """A rate lies outside the range where a detector model is trusted."""


class NonInvertibleError(DomainError):
    """A detected rate sits at or beyond the deadtime saturation bound."""


class UndefinedKappaError(SorkinSimError, ArithmeticError):
    """The second-order normalisation vanished, so kappa has no value."""

    exit_code = 4


class UndefinedVisibilityError(SorkinSimError, ArithmeticError):
    exit_code = 4


class IllConditionedError(SorkinSimError, ArithmeticError):
    """The data carry no usable information about the fitted parameter."""

    exit_code = 4


class NoSolutionError(SorkinSimError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

    exit_code = 4


class ConfigError(SorkinSimError):
    """Malformed configuration or input file; carries an optional location."""

    exit_code = 2

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column
