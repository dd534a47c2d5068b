"""Exception hierarchy.

Conditions that are legitimate outcomes (no renormalization found, no entry
within the horizon) are returned as sentinel objects by the relevant
functions; everything here is a genuine failure.
"""


class RenormLabError(Exception):
    pass


class InvalidMap(RenormLabError):
    """Map fails a structural hypothesis (odd/flat criticality, boundary)."""


class CriticalPointSingularity(RenormLabError):
    pass


class BranchCutViolation(RenormLabError):
    pass


class BranchAmbiguity(RenormLabError):
    pass


class NewtonDivergence(RenormLabError):
    pass


class NotLocallyUnimodal(RenormLabError):
    pass


class CriticalOrbit(RenormLabError):
    pass


class BranchBlocked(RenormLabError):
    """A critical value obstructs a monotone pullback."""


class ChainBroken(RenormLabError):
    pass


class PrecisionExhausted(RenormLabError):
    def __init__(self, message, levels=()):
        super().__init__(message)
        self.levels = list(levels)


class ChartDegenerate(RenormLabError):
    pass


class PullbackObstructed(RenormLabError):
    pass


class TrustRegionExit(RenormLabError):
    pass


class ContractionUnattainable(RenormLabError):
    def __init__(self, message, best_factor=float("nan"), best_scale=float("nan")):
        super().__init__(message)
        self.best_factor = best_factor
        self.best_scale = best_scale


class PullbackFailure(RenormLabError):
    pass


class NotNested(RenormLabError):
    pass


class ConfigError(RenormLabError):
    pass


class CacheMissing(RenormLabError):
    """A cached tower was required but none matches the configuration."""


class InsufficientDepth(RenormLabError):
    """The tower is too shallow for the requested report."""
