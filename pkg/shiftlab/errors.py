"""
Exception hierarchy shared by every shiftlab module.

All domain failures derive from ShiftLabError so the CLI can map them to
exit code 2 in one place.
"""


class ShiftLabError(Exception):
    """Base class for domain errors."""


# series
class CenterMismatch(ShiftLabError):
    pass


class CompositionMismatch(ShiftLabError):
    pass


class WindowTooLarge(ShiftLabError):
    pass


class JetTooShort(ShiftLabError):
    """A map or series cannot supply a Taylor jet of the requested order."""


# shiftmap
class NoConvergence(ShiftLabError):
    pass


class DomainEscape(ShiftLabError):
    """An orbit left the domain where the shift map is defined (or became non-finite)."""


class NotPeriodicLift(ShiftLabError):
    pass


class NotMonotone(ShiftLabError):
    pass


class InconclusiveBudget(ShiftLabError):
    pass


class NotContractive(ShiftLabError):
    """Basin test requested for a record that is not contractive."""


class CaptureRadiusTooLarge(ShiftLabError):
    pass


# nondegeneracy
class CapExceeded(ShiftLabError):
    pass


class OracleGap(ShiftLabError):
    pass


# koenigs / pantograph
class NeutralMultiplier(ShiftLabError):
    pass


class NoContraction(ShiftLabError):
    pass


class NotAFixedPoint(ShiftLabError):
    pass


class CoefficientOverflow(ShiftLabError):
    pass


class DegenerateLeadingCoefficient(ShiftLabError):
    pass


class NotExpansive(ShiftLabError):
    pass


class NonConvergence(ShiftLabError):
    pass


# kreigen
class GridMismatch(ShiftLabError):
    pass


class PositivityLost(ShiftLabError):
    pass


class BranchNotFixed(ShiftLabError):
    pass


# stepsim
class JetRadiusExceeded(ShiftLabError):
    pass


class DepthTooSmall(ShiftLabError):
    pass


class SingularMatching(ShiftLabError):
    pass


class QuadrantTestFailed(ShiftLabError):
    pass


# pipeline
class ConfigInfeasible(ShiftLabError):
    pass


class LambdaTooSmall(ShiftLabError):
    pass
