"""Exception types shared across the package.

Input and precondition problems raise ``ValueError`` subclasses; numeric
gates that fail after a computation ran to completion raise the
``RuntimeError`` subclasses below.  The CLI maps the former to exit code 2
and the latter to exit code 1.
"""


class DomainError(ValueError):
    """Evaluation requested outside a function's declared domain."""


class TailCheckError(ValueError):
    """A decay-at-infinity precondition failed on the probe horizon."""


class ToleranceFailure(RuntimeError):
    """A computed quantity missed its acceptance tolerance."""


class ConvergenceFailure(RuntimeError):
    """An iteration hit its cap before meeting its convergence tolerance."""
