"""Exception types shared by all hjprop modules."""


class HJPropError(Exception):
    """Base class for numerical failures raised by this package."""

    kind = "numerical"

    def __init__(self, *args, location=None):
        super().__init__(*args)
        #: optional scalar locating the failure (a time or coordinate)
        self.location = location


class DomainError(HJPropError):
    """Evaluation requested outside a system's declared validity domain."""

    kind = "domain"


class SingularJacobianError(HJPropError):
    """The mixed Hessian d2J/dqdP is degenerate (vanishing or divergent)."""

    kind = "singular-jacobian"


class CausticError(HJPropError):
    """A time window touches a caustic of the generating action."""

    kind = "caustic"


class ConvergenceError(HJPropError):
    """A Newton/secant iteration failed to converge."""

    kind = "non-convergence"


class FlatPhaseError(HJPropError):
    """Degenerate stationary phase: |phi''(P*)| below tolerance."""

    kind = "flat-phase"


class ExtrapolationError(HJPropError):
    """The damping-extrapolation residual exceeds the acceptance threshold."""

    kind = "extrapolation-residual"


class GridMismatchError(HJPropError):
    """Two wave functions do not share the same spatial grid."""

    kind = "grid-mismatch"
