"""Exception hierarchy shared by every solver stage."""


class IndemnifyError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioError(IndemnifyError, ValueError):
    """A scenario document or constructor argument is malformed.

    ``path`` points at the offending field (``loss.pieces[0].weight``).
    """

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}" if path else reason)


class DomainViolation(IndemnifyError, ValueError):
    """Utility evaluated at or below the lower end of its wealth domain."""


class QuadratureNonConvergence(IndemnifyError, RuntimeError):
    """Adaptive quadrature exceeded its subdivision depth."""


class BracketFailure(IndemnifyError, RuntimeError):
    """Endpoint signs do not bracket a root.

    Carries both endpoint values so the caller can tell which standing
    assumption broke.
    """

    def __init__(self, message: str, lo=None, hi=None, f_lo=None, f_hi=None):
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi
        if f_lo is not None:
            message = f"{message} (f({lo:.6g})={f_lo:.6g}, f({hi:.6g})={f_hi:.6g})"
        super().__init__(message)


class AssumptionViolation(IndemnifyError, RuntimeError):
    """A computed quantity contradicts a standing model assumption."""


class DegenerateDenominator(IndemnifyError, ZeroDivisionError):
    """The layer probability in the deductible derivative vanishes."""


class CaseDispatchAmbiguity(BracketFailure):
    """Two-layer case analysis hit endpoint signs it cannot classify."""


class UnsupportedDimension(IndemnifyError, ValueError):
    """Loss-only solver asked for more background states than it supports."""


class InfeasiblePremium(IndemnifyError, ValueError):
    """No admissible contract carries the requested premium."""


class DominanceViolation(IndemnifyError, AssertionError):
    """A sampled admissible contract beats the reported optimum."""

    def __init__(self, message: str, counterexample=None):
        self.counterexample = counterexample
        super().__init__(message)
