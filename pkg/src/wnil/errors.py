"""Exception types raised across the package."""


class WnilError(Exception):
    """Base class for all package errors."""


class EmptyBall(WnilError):
    pass


class NonFiniteWeight(WnilError):
    pass


class BadPolicy(WnilError):
    pass


class DegenerateBall(WnilError):
    pass


class ZeroAverage(WnilError):
    pass


class ZeroMass(WnilError):
    pass


class NoConvergence(WnilError):
    pass


class GridMismatch(WnilError):
    pass


class UncoveredPoint(WnilError):
    pass


class HypothesisFailed(WnilError):
    pass


class NotProper(WnilError):
    pass


class Empty(WnilError):
    pass


class EmptySweep(WnilError):
    pass


class HypothesisViolated(WnilError):
    pass


class ConfigInvalid(WnilError):
    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else str(key))


class IOFailure(WnilError):
    pass
