"""Exception hierarchy.

Validation problems derive from :class:`ValueError`; numerical failures
derive from :class:`NumericalError`. The CLI maps the two families onto
different exit codes.
"""


class DispFockError(Exception):
    """Base class for all package errors."""


class ValidationError(DispFockError, ValueError):
    """Bad parameters, malformed plans, impossible configurations."""


class NumericalError(DispFockError, ArithmeticError):
    """A computation could not be carried out to the requested accuracy."""


class KernelRangeError(NumericalError):
    """Displacement kernel requested outside its overflow-safe range."""

    def __init__(self, delta_abs, m, n, reason="outside overflow-safe range"):
        self.delta_abs = delta_abs
        self.m = m
        self.n = n
        super().__init__(
            f"displacement kernel {reason}: |delta|={delta_abs:.6g}, m={m}, n={n}"
        )


class CutoffError(NumericalError):
    """Fock cutoff too small for the requested truncation tolerance."""

    def __init__(self, message, required=None):
        self.required = required
        if required is not None:
            message = f"{message} (required n_max >= {required})"
        super().__init__(message)


class DegenerateOutcomeError(NumericalError):
    """No single-click events are possible, so conditional statistics are undefined."""


class FitError(NumericalError):
    """A fit did not converge or the design was rank deficient."""


class BracketError(NumericalError):
    """A root search could not bracket its target."""
