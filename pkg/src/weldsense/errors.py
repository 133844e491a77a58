"""Exception hierarchy.

Everything raised on purpose by the library derives from ``SensingError``.
``NumericalError`` covers geometric degeneracies and failed preconditions on
the data itself; the CLI maps those to exit code 3. Bad configuration maps
to exit code 2 via ``ConfigError``.
"""

from __future__ import annotations


class SensingError(Exception):
    """Base class for all library errors."""


class ConfigError(SensingError, ValueError):
    """Malformed or incomplete configuration / input file."""


class NumericalError(SensingError, ValueError):
    """A numerical precondition failed or the geometry is degenerate."""


class PreconditionError(NumericalError):
    """Generic input precondition violation (too few points, bad shapes...)."""


# geometry
class DegenerateInput(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class ParallelRays(NumericalError):
    pass


class GapExceeded(NumericalError):
    def __init__(self, gap: float, gap_tol: float):
        super().__init__(f"ray gap {gap:.6g} exceeds tolerance {gap_tol:.6g}")
        self.gap = gap
        self.gap_tol = gap_tol


class ParallelToPlane(NumericalError):
    pass


# homography / calibration
class RankDeficient(NumericalError):
    pass


class NonPhysical(NumericalError):
    pass


class PointAtInfinity(NumericalError):
    pass


class SingularGeometry(NumericalError):
    pass


class LabelMismatch(NumericalError):
    pass


class CoincidentPoints(NumericalError):
    pass


class CenterIllConditioned(IllConditioned):
    pass


# stereo
class NonPositiveDisparity(NumericalError):
    pass


class CountMismatch(NumericalError):
    pass


class OrderViolation(NumericalError):
    pass


# fringe
class InsufficientSteps(NumericalError):
    pass


class CarrierTooLow(NumericalError):
    pass


class DisconnectedMask(NumericalError):
    pass


# analytics
class TooFewSamples(NumericalError):
    pass


class NoFeatures(NumericalError):
    pass


class MissingFeatures(NumericalError):
    pass


class NoDominantLine(NumericalError):
    pass


class NearParallelFlanks(NumericalError):
    pass


class NoJump(NumericalError):
    pass


# simulator
class NoIntersection(NumericalError):
    pass
