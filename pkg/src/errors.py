"""
Exception hierarchy shared by every module.

The command-line runner maps each class onto its own exit code, so callers
can tell a bad argument from a numerical regime problem.
"""


class WaveguideError(Exception):
    """Base class for all toolkit errors."""


class ArgumentError(WaveguideError, ValueError):
    """Raised when an argument is outside its documented range."""


class PreconditionError(WaveguideError):
    """Raised when an operation's precondition (a named bound) is violated."""


class OverflowGuardError(WaveguideError, ArithmeticError):
    """Raised instead of silently producing an infinite exponential."""


class ConfigError(WaveguideError):
    """Raised when a configuration file or override cannot be used."""
