"""Exception types shared across the package.

Every rejection of bad input is a structured exception below; nothing in the
library calls sys.exit or lets a bare ValueError escape a public entry point.
"""


class ArmTwinError(Exception):
    """Base class for all armtwin errors."""


class RobotSyntaxError(ArmTwinError):
    """Robot description file is not well-formed JSON."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SchemaError(ArmTwinError):
    """Well-formed document that violates the robot file schema."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InvariantError(ArmTwinError):
    """Parsed model violates a structural invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownPreset(ArmTwinError):
    """Requested builtin preset does not exist."""


class DimensionMismatch(ArmTwinError):
    """Joint vector length does not match the model."""


class NonOrthonormal(ArmTwinError):
    """Rotation matrix fails the orthonormality invariant."""


class Unreachable(ArmTwinError):
    """Planar target outside the reachable annulus."""

    def __init__(self, message, deficit):
        self.deficit = deficit
        super().__init__(message)


class WrongSolverHint(ArmTwinError):
    """Model's solver hint does not match the solver being called."""


class SingularTarget(ArmTwinError):
    """Target admits infinitely many solutions for a joint (e.g. wrist
    center on the base axis)."""


class OutOfWorkspace(ArmTwinError):
    """No analytic branch reaches the target."""


class NoConvergence(ArmTwinError):
    """Numeric IK stopped before reaching tolerance.

    Carries the best iterate found and the residual history (monotone
    non-increasing by construction of the accepted steps).
    """

    def __init__(self, message, best, residual, history):
        self.best = best
        self.residual = residual
        self.history = history
        super().__init__(f"{message} (residual {residual:.3e})")


class EmptySet(ArmTwinError):
    """Solution selection requested on an empty solution set."""


class NonPositiveDuration(ArmTwinError):
    """Trajectory duration or sample step is not positive."""


class TargetAtBase(ArmTwinError):
    """Tracking target coincides with the approach origin; the approach
    direction is undefined."""


class BadPayload(ArmTwinError):
    """Command payload is malformed (wrong type, missing field, non-finite
    number, index out of range)."""


class IkFailure(ArmTwinError):
    """Pose command could not be solved; controller state is unchanged."""
