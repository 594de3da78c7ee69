"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class KacRiceError(Exception):
    """Base class; carries the name of the module that raised it."""

    module = "kacrice"


class InvalidArgumentError(KacRiceError, ValueError):
    pass


class DegeneratePointError(KacRiceError):
    """All spanning functions vanish at ``x``, so K_n(x, x) = 0."""

    module = "kernels"

    def __init__(self, x: float, message: str | None = None):
        self.x = x
        super().__init__(message or f"kernel K_n(x,x) vanishes at x={x!r}")


class DegenerateFrameError(KacRiceError):
    """tau_n(x) = 0: P_n(x) and P_n'(x) are linearly dependent at ``x``."""

    module = "intensity"

    def __init__(self, x: float, message: str | None = None):
        self.x = x
        super().__init__(message or f"degenerate frame (tau_n = 0) at x={x!r}")


class DegeneratePolynomialError(KacRiceError):
    module = "montecarlo"


class BoundaryError(KacRiceError, ValueError):
    module = "kernels"


class HypothesisViolationError(KacRiceError, ValueError):
    module = "intensity"


class InversionInconsistencyError(KacRiceError):
    module = "intensity"


class UnsupportedError(KacRiceError):
    module = "charfn"


class WeightOverflowError(KacRiceError, OverflowError):
    module = "basis"


class DegenerateIntervalError(KacRiceError):
    """Raised by expected_count when degenerate points could not be integrated over."""

    module = "intensity"

    def __init__(self, points):
        self.points = sorted(points)
        super().__init__(f"degenerate points inside the interval: {self.points}")
