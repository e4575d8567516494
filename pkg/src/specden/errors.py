"""Exception hierarchy shared by all specden modules."""


class SpecdenError(Exception):
    """Base class for every error raised by specden."""


# measure ---------------------------------------------------------------

class MeasureError(SpecdenError, ValueError):
    pass


class EmptyMeasure(MeasureError):
    pass


class NegativeValue(MeasureError):
    pass


class WeightSumMismatch(MeasureError):
    pass


class ZeroNoiseAtom(MeasureError):
    pass


class BadBounds(MeasureError):
    pass


# kernel / solver ---------------------------------------------------------

class SingularAtom(SpecdenError, ArithmeticError):
    """Some atom makes ``1 + s*gu + t*mu`` vanish numerically."""


class ZeroGu(SpecdenError, ArithmeticError):
    pass


class ZeroZ(SpecdenError, ArithmeticError):
    pass


class DegenerateG(SpecdenError, ArithmeticError):
    pass


class DivergedToPole(SpecdenError, ArithmeticError):
    pass


class NotConverged(SpecdenError, RuntimeError):
    """Iteration budget exhausted; ``best`` holds the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NegativeImaginaryDrift(SpecdenError, RuntimeError):
    """The iterate left the physical (upper half-plane) branch."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ContinuationStall(SpecdenError, RuntimeError):
    pass


# density / support --------------------------------------------------------

class GridTooNarrow(SpecdenError, ValueError):
    pass


class InconsistentWithDensity(SpecdenError, RuntimeError):
    pass


class ScanTooCoarse(SpecdenError, RuntimeError):
    pass


# simulator / compare -------------------------------------------------------

class DimensionMismatch(SpecdenError, ValueError):
    pass


class BudgetExceeded(SpecdenError, ValueError):
    pass


class EigensolveFailure(SpecdenError, RuntimeError):
    pass


class GridTooCoarse(SpecdenError, ValueError):
    pass


# cli --------------------------------------------------------------------

class ConfigParse(SpecdenError, ValueError):
    pass
