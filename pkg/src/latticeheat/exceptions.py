"""Error types raised by the library."""


class ToleranceNotMetError(RuntimeError):
    """A refinement loop ran out of budget before reaching its tolerance.

    Attributes
    ----------
    previous, last : object
        The last two estimates produced by the loop.
    """

    def __init__(self, message, previous=None, last=None):
        super().__init__(message)
        self.previous = previous
        self.last = last


class ExtractionFailedError(RuntimeError):
    """Large-time extrapolation did not settle."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnsupportedCaseError(ValueError):
    """The requested quantity is not available for this operator class."""


class NotAGeneratorError(ValueError):
    """The stencil does not define a Markov generator (a rate is negative)."""
