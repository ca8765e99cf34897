"""Exception types shared across the package."""


class LCFlowError(Exception):
    """Base class for all package errors."""


class DegenerateDirector(LCFlowError):
    """A director sample is too close to zero to be projected onto the sphere."""


class DegenerateInput(LCFlowError):
    """A ratio or inequality check was asked about a field with a vanishing denominator."""


class StepCollapse(LCFlowError):
    """The CFL step fell below the configured floor (used as a blowup signal)."""

    def __init__(self, dt, dt_min):
        super().__init__(f"required dt={dt:.3e} below dt_min={dt_min:.3e}")
        self.dt = dt
        self.dt_min = dt_min


class NonFinite(LCFlowError):
    """A field sample became NaN or infinite."""


class Infeasible(LCFlowError):
    """No optimizer start produced a feasible, nondegenerate director field."""


class ParseError(LCFlowError):
    """Malformed configuration or data file."""


class ValidationError(LCFlowError):
    """A configuration value is missing or out of range."""


class BadMagic(LCFlowError):
    """Snapshot file does not start with the expected magic bytes."""


class VersionMismatch(LCFlowError):
    """Snapshot file carries an unsupported format version."""


class InvariantViolation(LCFlowError):
    """Loaded data violates a field invariant (unit norm, divergence-free)."""
