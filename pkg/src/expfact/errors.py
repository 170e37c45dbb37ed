"""Exception hierarchy.

Every failure raised by the library derives from :class:`ExpFactError`, so
callers (and the CLI) can separate pipeline errors from programming bugs.
"""


class ExpFactError(Exception):
    """Base class for all library errors."""


# --- configuration / structure -------------------------------------------

class ConfigurationError(ExpFactError, ValueError):
    """Invalid backend descriptor or matrix spec."""


class StructuralError(ExpFactError, ValueError):
    """Mismatched sample spaces or matrix shapes."""


class UnsupportedBackend(ExpFactError):
    """Operation is not defined on this kind of sample space."""


class PreconditionError(ExpFactError, ValueError):
    """An argument violates a documented precondition."""


# --- numerics --------------------------------------------------------------

class NumericalError(ExpFactError):
    """A floating point computation failed at a given sample."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class Undersampled(NumericalError):
    """Adjacent phase increments are too large to unwrap reliably."""


class ZeroOnPath(NumericalError):
    """A value vanishes on a path where a phase is required."""


class NotInvertible(ExpFactError):
    def __init__(self, index, value):
        super().__init__(f"element not invertible: |a| = {value:.3e} at sample {index}")
        self.index = index
        self.value = value


class NotExp1(ExpFactError):
    """Element is not an exponential (vanishes, or winds around 0)."""


# --- spectra / logarithms ----------------------------------------------------

class Ambiguous(ExpFactError):
    """0 lies within the resolution radius of the spectrum."""


class NoRayFound(ExpFactError):
    """Every ray from the origin meets the spectrum."""


class BranchViolation(NumericalError):
    """Spectrum touches the chosen branch cut."""


class NotInSigmaN(ExpFactError):
    """0 is not in the unbounded component of the complement of the spectrum."""


class NotUnipotent(ExpFactError):
    pass


# --- triangular construction -------------------------------------------------

class ProductNotOne(ExpFactError):
    def __init__(self, deviation):
        super().__init__(f"product of diagonal entries deviates from 1 by {deviation:.3e}")
        self.deviation = deviation


class DiagonalProductNotOne(ProductNotOne):
    pass


class NotDiagonal(ExpFactError):
    pass


class NotTriangular(ExpFactError):
    pass


class NonUnipotentResult(ExpFactError):
    pass


class ScheduleExhausted(ExpFactError):
    pass


# --- general construction ----------------------------------------------------

class PipelineError(ExpFactError):
    """Base for failures inside the two-exponential reduction.

    ``trace`` is attached by :func:`expfact.general.factorize_two_exp` so the
    partial reduction can be dumped for diagnosis.
    """

    trace = None


class SearchExhausted(PipelineError):
    def __init__(self, message, best_clearance=0.0):
        super().__init__(f"{message} (best relative clearance {best_clearance:.3e})")
        self.best_clearance = best_clearance


class CommonZero(PipelineError):
    pass


class NotLeftInvertible(PipelineError):
    pass


class AllLowerEntriesZero(PipelineError):
    pass


class NoLowerEntry(PipelineError):
    pass


class TopLeftNotExp1(PipelineError):
    pass


class SolveFailure(PipelineError):
    def __init__(self, message, condition=float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class DetNotExp1(PipelineError):
    pass


class NotAlternating(ExpFactError):
    pass


class NotUnitriangular(ExpFactError):
    pass


class NotFinitePoints(UnsupportedBackend):
    pass


class NotInvertibleAtPoint(ExpFactError):
    def __init__(self, index):
        super().__init__(f"matrix is singular at point {index}")
        self.index = index


class TooFewSamples(PreconditionError):
    pass
