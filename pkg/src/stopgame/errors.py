"""Exception hierarchy shared across the package.

Two failure categories matter to callers (and map to CLI exit codes):
bad inputs, and internal consistency violations detected at runtime.
"""


class StopGameError(Exception):
    """Base class for all package errors."""


class InputError(StopGameError):
    """Malformed or inconsistent input (dimension mismatch, bad flag, ...)."""


class IntegrityError(StopGameError):
    """An internal invariant failed (flow left its domain, no bracketing root, ...)."""


class ConvergenceError(IntegrityError):
    """Iterative solver did not converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual
