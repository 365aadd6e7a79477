"""armtwin: serial-arm motion control with a digital-twin sync server."""

from .errors import (
    ArmTwinError,
    BadPayload,
    DimensionMismatch,
    EmptySet,
    IkFailure,
    InvariantError,
    NoConvergence,
    NonOrthonormal,
    NonPositiveDuration,
    OutOfWorkspace,
    RobotSyntaxError,
    SchemaError,
    SingularTarget,
    TargetAtBase,
    UnknownPreset,
    Unreachable,
    WrongSolverHint,
)
from .geometry import (
    Pose,
    Transform,
    normalize_angle,
    pose_to_transform,
    rotation_distance,
    transform_to_pose,
)
from .ik import (
    BranchLabel,
    DlsOptions,
    IkSolution,
    IkSolutionSet,
    ik_analytic_6dof,
    ik_numeric_dls,
    ik_planar_2r,
    select_solution,
    solve_ik,
)
from .kinematics import (
    PoseCommand,
    forward_kinematics,
    joint_origins,
    link_transform,
    pose_from_command,
)
from .model import (
    DHRow,
    JointLimit,
    RobotModel,
    builtin_preset,
    load_robot_file,
    parse_robot_description,
    resolve_robot,
    serialize_robot_description,
    spherical_wrist_error,
    validate_model,
)
from .motion import (
    Trajectory,
    TrackingState,
    plan_joint_trajectory,
    sample_trajectory,
    track_target_step,
    validate_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "ArmTwinError",
    "BadPayload",
    "BranchLabel",
    "DHRow",
    "DimensionMismatch",
    "DlsOptions",
    "EmptySet",
    "IkFailure",
    "IkSolution",
    "IkSolutionSet",
    "InvariantError",
    "JointLimit",
    "NoConvergence",
    "NonOrthonormal",
    "NonPositiveDuration",
    "OutOfWorkspace",
    "Pose",
    "PoseCommand",
    "RobotModel",
    "RobotSyntaxError",
    "SchemaError",
    "SingularTarget",
    "TargetAtBase",
    "Trajectory",
    "TrackingState",
    "Transform",
    "UnknownPreset",
    "Unreachable",
    "WrongSolverHint",
    "builtin_preset",
    "forward_kinematics",
    "ik_analytic_6dof",
    "ik_numeric_dls",
    "ik_planar_2r",
    "joint_origins",
    "link_transform",
    "load_robot_file",
    "normalize_angle",
    "parse_robot_description",
    "plan_joint_trajectory",
    "pose_from_command",
    "pose_to_transform",
    "resolve_robot",
    "rotation_distance",
    "sample_trajectory",
    "select_solution",
    "serialize_robot_description",
    "solve_ik",
    "spherical_wrist_error",
    "track_target_step",
    "transform_to_pose",
    "validate_model",
    "validate_trajectory",
]
