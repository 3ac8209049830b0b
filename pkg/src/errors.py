"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SaginError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SaginError):
    """Invalid or unreadable configuration (CLI exit code 1)."""


class InvalidArgumentError(SaginError, ValueError):
    """An argument violates the documented precondition."""


class PreconditionError(SaginError):
    """Operation invoked on a state it does not accept."""


class NumericalFailure(SaginError):
    """Solver stall, singular system or iteration cap reached."""


class InfeasibleError(SaginError):
    """No point satisfying the constraint set was found."""


class NotApplicableError(SaginError):
    """Scheme cannot be applied to this scenario (e.g. ZF dimension guard)."""
