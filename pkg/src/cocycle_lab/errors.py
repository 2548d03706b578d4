"""Exception hierarchy shared by the laboratory modules."""

from __future__ import annotations


class CocycleLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CocycleLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericOverflowError(CocycleLabError, ArithmeticError):
    """A fiber state left the overflow guard or became non-finite.

    Carries the base point, the offending state and (when known) the time
    index at which the guard tripped.
    """

    def __init__(self, message, y=None, u=None, t=None):
        super().__init__(message)
        self.y = y
        self.u = u
        self.t = t


class IntegrationBlowupError(NumericOverflowError):
    """A Runge-Kutta sub-step produced a non-finite value."""

    def __init__(self, message, y=None, u=None, t=None, substep=None):
        super().__init__(message, y=y, u=u, t=t)
        self.substep = substep


class NotDissipativeError(CocycleLabError):
    """A fiber computation diverged; the system is not dissipative there."""

    def __init__(self, message, fiber_index=None, y=None):
        super().__init__(message)
        self.fiber_index = fiber_index
        self.y = y


class WindowError(CocycleLabError, ValueError):
    """A requested time lies outside a trajectory window, or a window is too small."""


class DiagnosticError(CocycleLabError):
    """A diagnostic cannot be evaluated on the supplied data."""


class PreconditionError(CocycleLabError):
    """An operation was called without the certificate it requires."""


class NonConvergenceError(CocycleLabError):
    """An iteration hit its budget before meeting the stopping rule."""

    def __init__(self, message, last_change=None, iterations=None):
        super().__init__(message)
        self.last_change = last_change
        self.iterations = iterations


class BoundViolation(CocycleLabError, AssertionError):
    """A proven inequality failed on computed data."""


class RegistryError(CocycleLabError, KeyError):
    """Unknown scenario name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
