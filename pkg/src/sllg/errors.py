"""Exception types raised across the package."""


class SLLGError(Exception):
    """Base class for all package errors."""


class GridMismatchError(SLLGError, ValueError):
    """Two fields live on different grids."""


class PreconditionError(SLLGError, ValueError):
    """An operation was called outside its domain of validity."""


class ConstraintViolationError(PreconditionError):
    """A field is too far from the unit sphere for the requested operation."""


class NumericalBlowupError(SLLGError, FloatingPointError):
    """The time stepper produced non-finite values."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state after step {step}")


class L2BoundViolation(SLLGError, ArithmeticError):
    """The discrete L2 norm exceeded the initial norm beyond the allowed slack."""

    def __init__(self, step: int, ratio: float):
        self.step = step
        self.ratio = ratio
        super().__init__(
            f"L2 bound violated at step {step}: norm ratio {ratio:.12g}; "
            "the scheme is unstable at this dt, try a smaller time step"
        )


class TopologyObstructionError(SLLGError, ValueError):
    """The pullback area form has nonzero flux, so no periodic vector potential exists."""

    def __init__(self, fluxes):
        self.fluxes = tuple(float(f) for f in fluxes)
        super().__init__(
            "nonzero net flux through coordinate 2-tori: "
            + ", ".join(f"{f:.6g}" for f in self.fluxes)
        )


class InvariantTrackingError(SLLGError):
    """An invariant could not be evaluated at some time along a trajectory."""

    def __init__(self, t: float, cause: Exception):
        self.t = t
        self.cause = cause
        super().__init__(f"invariant evaluation failed at t={t:.6g}: {cause}")


class InsufficientDataError(SLLGError, ValueError):
    """Not enough samples for the requested estimate."""


class ConfigError(SLLGError, ValueError):
    """Invalid run configuration."""


class SnapshotFormatError(SLLGError, ValueError):
    """Base class for snapshot file decoding problems."""


class TruncatedSnapshotError(SnapshotFormatError):
    pass


class ChecksumError(SnapshotFormatError):
    pass


class SnapshotVersionError(SnapshotFormatError):
    pass
