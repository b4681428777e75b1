"""Exception hierarchy; the CLI maps each class to an exit code."""


class FknnError(Exception):
    """Base class for all package errors."""


class ConfigError(FknnError, ValueError):
    """Invalid or inconsistent experiment configuration."""


class DataError(FknnError, ValueError):
    """Malformed, degenerate, or mismatched input data."""


class NumericError(FknnError, ArithmeticError):
    """Non-finite values encountered during optimisation."""

    def __init__(self, message, iteration=None, lam=None):
        super().__init__(message)
        self.iteration = iteration
        self.lam = lam
