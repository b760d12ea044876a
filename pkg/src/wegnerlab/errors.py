"""Exception types raised across the package.

All of them subclass :class:`ValueError` so callers that only care about
"bad input" can catch one thing.
"""


class WegnerLabError(ValueError):
    """Base class for every error raised by wegnerlab."""


class InvalidMeasure(WegnerLabError):
    pass


class FluxNotQuantized(WegnerLabError):
    pass


class DimensionMismatch(WegnerLabError):
    pass


class DimensionExceeded(WegnerLabError):
    pass


class EmptyProjector(WegnerLabError):
    pass


class VectorsNotRetained(WegnerLabError):
    pass


class ShiftTooSmall(WegnerLabError):
    pass


class DegenerateFit(WegnerLabError):
    pass


class NonPositiveData(WegnerLabError):
    pass


class NotAProjector(WegnerLabError):
    pass


class NoAdmissibleFlux(WegnerLabError):
    pass


class ConfigError(WegnerLabError):
    pass


class RealizationError(WegnerLabError):
    """A solver failure inside a Monte Carlo loop, tagged with its realization."""

    def __init__(self, realization, L, cause):
        self.realization = realization
        self.L = L
        self.cause = cause
        super().__init__(f"realization {realization} (L={L}) failed: {cause}")

    def __reduce__(self):
        # survive the trip back from a worker process
        return (type(self), (self.realization, self.L, self.cause))
