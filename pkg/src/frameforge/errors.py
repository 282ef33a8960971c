"""Exception hierarchy shared by all frameforge modules."""

from __future__ import annotations

from dataclasses import dataclass, field


class FrameError(Exception):
    """Base class for every frameforge error."""


class InvalidInput(FrameError, ValueError):
    """An argument violates a documented precondition."""


class NumericalFailure(FrameError):
    """A dense linear-algebra routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotAFrame(FrameError):
    """The lower frame bound is not positive within tolerance."""


class NotAContinuousFrame(NotAFrame):
    """The quadrature lower bound of a continuous model is not positive."""


class UseHeuristic(FrameError):
    """The exact search was asked to handle more vectors than its limit."""


class ResourceLimit(FrameError):
    """A configured size cap (copies, subsets, cells) would be exceeded."""


class CertificationError(FrameError):
    """A constructive step could not certify an inequality it relies on.

    ``trail`` holds whatever records were produced before the failure.
    """

    def __init__(self, message, trail=None):
        super().__init__(message)
        self.trail = list(trail) if trail is not None else []


class PartitionFailure(CertificationError):
    """The partition recursion could not certify a split."""


class DecompositionFailure(CertificationError):
    """The block decomposition could not meet its leakage budget."""


class SamplingFailure(CertificationError):
    """A block of the sampling pipeline failed one of its inequalities."""


class QuadratureFailure(FrameError):
    """Dyadic refinement hit its cap before successive estimates agreed."""

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class DiscretizationFailure(CertificationError):
    """The epsilon-net refinement or its bound check failed."""


@dataclass
class CertificateFailure:
    """Reported (not raised) outcome of a heuristic that missed its target."""

    target: float
    best_achieved: float
    best_split: tuple = field(default=((), ()))
    reason: str = ""

    def __bool__(self):
        return False
