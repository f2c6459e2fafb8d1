"""Exception hierarchy shared by the toolkit."""


class AndersonError(Exception):
    """Base class for all toolkit errors."""


class SizingError(AndersonError, ValueError):
    """A grid, matrix or enumeration exceeds a configured size cap or does not fit."""


class WindowError(AndersonError, ValueError):
    """A Lifshitz fit window contains unusable IDS values."""


class ConvergenceError(AndersonError, RuntimeError):
    """An iterative eigenvalue search did not converge.

    ``bracket`` holds the last ``(lo, hi)`` interval known to contain the
    eigenvalue, when one is available.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(AndersonError, ValueError):
    """Invalid experiment configuration; the message names the offending key."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
