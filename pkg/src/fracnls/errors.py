"""Exception hierarchy shared by every fracnls module."""


class FracNLSError(Exception):
    """Base class for all errors raised by fracnls."""


class InvalidFieldError(FracNLSError):
    """A field holds non-finite values or does not match its grid."""


class ParameterError(FracNLSError, ValueError):
    """A scalar argument lies outside its admissible range."""


class RegimeError(ParameterError):
    """Problem parameters fall outside the exponent regime an operation needs."""


class ResolutionError(FracNLSError):
    """A dilation is too large to stay resolvable on the grid."""


class FiberRangeError(FracNLSError, OverflowError):
    """An exponential term of the fiber map overflowed.

    ``term`` names the offending coefficient (``"A"``, ``"B"``, ``"C"`` or ``"D"``).
    """

    def __init__(self, term, t):
        super().__init__(f"fiber term {term} overflows at t={t!r}")
        self.term = term
        self.t = t


class GeometryDegenerateError(FracNLSError):
    """Root bracketing failed: the expected critical points or zeros do not exist."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class PreconditionError(FracNLSError):
    """An admissibility condition failed; ``lhs`` and ``rhs`` carry both sides."""

    def __init__(self, message, lhs=None, rhs=None):
        super().__init__(message)
        self.lhs = lhs
        self.rhs = rhs


class ProjectionError(FracNLSError):
    """Projection of a zero field onto the mass sphere."""


class EstimationError(FracNLSError):
    """Constant estimation did not converge; ``trace`` holds the quotient history."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ManifestError(FracNLSError):
    """Aggregated manifest validation failure.

    ``errors`` is a list of ``(json_pointer, message)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"{ptr}: {msg}" for ptr, msg in self.errors)
        super().__init__(f"invalid manifest: {lines}")
