"""Exception hierarchy. Each class carries the CLI exit status it maps to."""


class KplsError(Exception):
    exit_code = 1


class ConfigError(KplsError, ValueError):
    """Invalid options, preconditions or usage."""

    exit_code = 1


class DataError(KplsError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class DegeneracyError(KplsError, ArithmeticError):
    """A numerical quantity vanished or a system became singular."""

    exit_code = 3

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components


class SearchFailure(DegeneracyError):
    """Every evaluated hyperparameter configuration was infeasible."""


class EarlyStopWarning(UserWarning):
    """KPLS extraction stopped before the requested number of components."""
