"""Forward kinematics for serial chains and the text-command pose mapping.

All operations are pure functions over immutable values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .geometry import Pose, Transform, dh_matrix
from .model import DHRow, RobotModel


def link_transform(row: DHRow, q: float) -> Transform:
    """Transform contributed by one joint at angle q (theta offset applied)."""
    return Transform.from_matrix(dh_matrix(row.a, row.alpha, row.d, q + row.theta_offset))


def _check_length(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != model.joint_count:
        raise DimensionMismatch(
            f"model {model.name!r} has {model.joint_count} joints, got {q.shape[0]} values"
        )
    return q


def frame_matrices(model: RobotModel, q) -> list[np.ndarray]:
    """Cumulative 4x4 frames [T0_1, T0_2, ..., T0_n] without the tool offset."""
    q = _check_length(model, q)
    frames = []
    t = np.eye(4)
    for (row, _), angle in zip(model.joints, q):
        t = t @ dh_matrix(row.a, row.alpha, row.d, angle + row.theta_offset)
        frames.append(t)
    return frames


def joint_origins(model: RobotModel, q) -> np.ndarray:
    """Positions of the base and every joint frame origin, shape (n+1, 3).

    Row 0 is the base origin; row i is the origin of frame i. Useful for
    rendering the chain and for tracking approach directions.
    """
    frames = frame_matrices(model, q)
    return np.vstack([np.zeros(3)] + [f[:3, 3] for f in frames])


def forward_kinematics(model: RobotModel, q) -> Transform:
    """End-effector transform: chain product of link transforms, then tool."""
    frames = frame_matrices(model, q)
    return Transform.from_matrix(frames[-1]) @ model.tool_offset


def flange_target(model: RobotModel, target: Transform) -> Transform:
    """Strip the tool offset from an end-effector target."""
    return target @ model.tool_offset.inverse()


@dataclass(frozen=True)
class PoseCommand:
    """One text-input command: six numbers in the field order x, psi, y,
    theta, z, phi. Linear fields are meters, angular fields are degrees."""

    x: float
    psi: float
    y: float
    theta: float
    z: float
    phi: float

    FIELD_ORDER = ("x", "psi", "y", "theta", "z", "phi")

    def __post_init__(self):
        for name in self.FIELD_ORDER:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"pose command field {name!r} must be a finite number, got {v!r}")

    @classmethod
    def from_values(cls, values) -> "PoseCommand":
        values = list(values)
        if len(values) != 6:
            raise ValueError(f"pose command needs 6 values, got {len(values)}")
        return cls(*values)


def pose_from_command(cmd: PoseCommand) -> Pose:
    """Map a text command to a Pose: degrees become radians, position is
    (x, y, z) meters."""
    return Pose(
        (cmd.x, cmd.y, cmd.z),
        (math.radians(cmd.psi), math.radians(cmd.theta), math.radians(cmd.phi)),
    )
