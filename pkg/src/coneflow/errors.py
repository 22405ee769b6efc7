"""Exception types shared across the package."""


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids between operands."""


class FieldError(ValueError):
    """Invalid field data (shape, dtype, rank combination)."""


class ConeError(ValueError):
    """Invalid cone parameters or degenerate direction arguments."""


class ConfigError(ValueError):
    """Malformed experiment configuration (unknown keys, bad values)."""


class PreconditionError(ValueError):
    """A documented operation precondition does not hold on the inputs."""


class InvariantViolation(RuntimeError):
    """An internal algebraic identity failed beyond numerical tolerance."""


class ConstructionError(RuntimeError):
    """Initial data construction exceeded a residual gate.

    Carries the offending residual name and value so callers can report
    which gate failed.
    """

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class BlowupDetected(RuntimeError):
    """Non-finite values appeared during time stepping.

    Not a programming error: large-data runs are allowed to blow up and
    the sweep driver records the failure time as an outcome label.
    """

    def __init__(self, t: float):
        super().__init__(f"non-finite state detected at t={t:.6g}")
        self.t = t
