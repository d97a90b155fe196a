"""Exception types shared across the package."""


class HybridSimError(Exception):
    """Base class for all package errors."""


class StructuralError(HybridSimError):
    """A system definition does not resolve (dangling mode ids, bad dims)."""


class ChartSingular(HybridSimError):
    """Attach-map Jacobian is numerically singular."""


class OnDiscontinuity(HybridSimError):
    """local_field was evaluated on the glued surface; use Filippov classification."""


class OutsideChart(HybridSimError):
    """Point does not belong to the chart's local domain."""


class NotInOverlap(HybridSimError):
    """chart_transition was asked for a point outside the chart overlap."""


class DivisionDegenerate(HybridSimError):
    """Sliding coefficient denominator is numerically zero."""


class NonUniqueContinuation(HybridSimError):
    """Repelling sliding reached without a configured branch policy."""


class TangentDegenerate(HybridSimError):
    """Both normal rates vanish; Filippov classification failed."""

    def __init__(self, msg, point=None, rates=None):
        super().__init__(msg)
        self.point = point
        self.rates = rates


class LeftAllDomains(HybridSimError):
    """The state exited every domain without hitting a guard."""

    def __init__(self, msg, time=None, point=None):
        super().__init__(msg)
        self.time = time
        self.point = point


class TransversalityViolation(HybridSimError):
    """A sweep against the exact switched reference requires transversal
    guard crossings, and the sampled check found a violation."""


class StepSizeUnderflow(HybridSimError):
    """Adaptive step can no longer advance the clock."""


class NewtonDivergence(HybridSimError):
    """Implicit solver's Newton iteration failed to converge."""


class NoSignChange(HybridSimError):
    """Event bracket does not straddle a sign change (grazing contact)."""
