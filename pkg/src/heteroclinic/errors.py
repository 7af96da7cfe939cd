"""Exception hierarchy shared by all modules."""


class HeteroclinicError(Exception):
    """Base class for every error raised by the package."""


# potential ---------------------------------------------------------------

class HypothesisViolation(HeteroclinicError):
    """A sampled audit contradicts one of the structural hypotheses on W."""


class GrowthViolation(HypothesisViolation):
    pass


class DisconnectedComponentTouch(HypothesisViolation):
    pass


class ExtraComponentDetected(HypothesisViolation):
    """Sublevel points that belong to neither well (a third component)."""


class ConvexityViolation(HypothesisViolation):
    pass


class AmbiguousComponent(HeteroclinicError):
    pass


class ComponentNotFound(HeteroclinicError):
    pass


class MissingLocalization(HeteroclinicError):
    pass


class NameNotFound(HeteroclinicError, KeyError):
    pass


# path --------------------------------------------------------------------

class EpsilonTooLarge(HeteroclinicError, ValueError):
    pass


class DimensionMismatch(HeteroclinicError, ValueError):
    pass


class GridMismatch(HeteroclinicError, ValueError):
    pass


# compactify --------------------------------------------------------------

class EmptyControlSet(HeteroclinicError):
    pass


class ShiftExceedsGrid(HeteroclinicError):
    pass


class IndexOrder(HeteroclinicError, ValueError):
    pass


class BoundaryOutside(HeteroclinicError):
    pass


# minimize ----------------------------------------------------------------

class DivergedBelowZero(HeteroclinicError):
    pass


class NotReflected(HeteroclinicError):
    """A localized potential was handed to a solver without its reflection."""


class StepUnstable(HeteroclinicError):
    pass


# oracle ------------------------------------------------------------------

class NegativePotentialOnSegment(HeteroclinicError):
    pass


class NonMonotone(HeteroclinicError):
    pass


# cli ---------------------------------------------------------------------

class ConfigError(HeteroclinicError, ValueError):
    pass


class SchemaError(HeteroclinicError, ValueError):
    pass
