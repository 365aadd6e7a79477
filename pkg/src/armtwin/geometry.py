"""Frame algebra: rigid transforms, Euler-angle poses, and the DH matrix.

Conventions used throughout the package:

* Rotations are 3x3 orthonormal matrices with determinant +1.
* Euler angles are extrinsic X-Y-Z (roll-pitch-yaw): ``R = Rz(phi) @
  Ry(theta) @ Rx(psi)`` with psi about X, theta about Y, phi about Z.
* Angles are radians everywhere inside the library; degrees appear only at
  text-command boundaries.
* The DH transform for one joint is ``Rotz(theta) . Transz(d) . Transx(a) .
  Rotx(alpha)`` (standard, distal convention).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonOrthonormal

ROTATION_TOL = 1e-9
GIMBAL_LOCK_TOL = 1e-7


def normalize_angle(x: float) -> float:
    """Map an angle to its representative in (-pi, pi]."""
    r = math.remainder(x, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


def angle_difference(a: float, b: float) -> float:
    """Signed difference a - b reduced mod 2*pi into (-pi, pi]."""
    return normalize_angle(a - b)


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_defect(r: np.ndarray) -> float:
    """Max-abs deviation of R^T R from the identity."""
    return float(np.abs(r.T @ r - np.eye(3)).max())


def require_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> None:
    """Raise NonOrthonormal unless r is a proper rotation within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise NonOrthonormal(f"rotation must be 3x3, got {r.shape}")
    defect = rotation_defect(r)
    if defect > tol:
        raise NonOrthonormal(f"R^T R deviates from identity by {defect:.3e}")
    det = float(np.linalg.det(r))
    if abs(det - 1.0) > tol:
        raise NonOrthonormal(f"determinant {det:.12f} is not +1")


def rotation_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """Max-abs elementwise distance between two rotation matrices."""
    return float(np.abs(np.asarray(r1) - np.asarray(r2)).max())


@dataclass(frozen=True, eq=False)
class Transform:
    """Rigid transform: 3x3 rotation plus a position vector in meters."""

    rotation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        p = np.array(self.position, dtype=float).reshape(3)
        r.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "position", p)

    @classmethod
    def identity(cls) -> "Transform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Transform":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.position
        return m

    def compose(self, other: "Transform") -> "Transform":
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.position + self.position,
        )

    def __matmul__(self, other: "Transform") -> "Transform":
        return self.compose(other)

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -rt @ self.position)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.position

    def is_rotation_valid(self, tol: float = ROTATION_TOL) -> bool:
        return (
            rotation_defect(self.rotation) <= tol
            and abs(float(np.linalg.det(self.rotation)) - 1.0) <= tol
        )


@dataclass(frozen=True, eq=False)
class Pose:
    """Position in meters plus extrinsic X-Y-Z Euler orientation in radians.

    Angles are stored normalized to (-pi, pi].
    """

    position: np.ndarray
    orientation: tuple[float, float, float]  # (psi, theta, phi)

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        p.flags.writeable = False
        object.__setattr__(self, "position", p)
        psi, theta, phi = self.orientation
        object.__setattr__(
            self,
            "orientation",
            (normalize_angle(psi), normalize_angle(theta), normalize_angle(phi)),
        )

    @property
    def psi(self) -> float:
        return self.orientation[0]

    @property
    def theta(self) -> float:
        return self.orientation[1]

    @property
    def phi(self) -> float:
        return self.orientation[2]


def rpy_to_rotation(psi: float, theta: float, phi: float) -> np.ndarray:
    """Rotation for extrinsic X-Y-Z Euler angles: Rz(phi) Ry(theta) Rx(psi)."""
    return rotation_z(phi) @ rotation_y(theta) @ rotation_x(psi)


def rotation_to_rpy(r: np.ndarray) -> tuple[float, float, float]:
    """Extract extrinsic X-Y-Z Euler angles from a rotation matrix.

    Within GIMBAL_LOCK_TOL of theta = +/-pi/2 the X and Z rotations become
    dependent; the tie is broken deterministically by setting psi = 0 and
    folding the residual rotation into phi.
    """
    r = np.asarray(r, dtype=float)
    cos_theta = math.hypot(r[2, 1], r[2, 2])
    theta = math.atan2(-r[2, 0], cos_theta)
    if cos_theta < GIMBAL_LOCK_TOL:
        theta = math.copysign(math.pi / 2.0, -r[2, 0])
        psi = 0.0
        phi = math.atan2(-r[0, 1], r[1, 1])
    else:
        psi = math.atan2(r[2, 1], r[2, 2])
        phi = math.atan2(r[1, 0], r[0, 0])
    return psi, theta, phi


def pose_to_transform(pose: Pose) -> Transform:
    """Convert a Pose to the equivalent rigid Transform."""
    return Transform(rpy_to_rotation(*pose.orientation), pose.position)


def transform_to_pose(t: Transform, tol: float = ROTATION_TOL) -> Pose:
    """Convert a Transform to a Pose; raises NonOrthonormal on a bad rotation.

    Inverse of pose_to_transform up to rotation-matrix equality; the Euler
    triple itself may differ at gimbal lock (see rotation_to_rpy).
    """
    require_rotation(t.rotation, tol)
    return Pose(t.position, rotation_to_rpy(t.rotation))


def dh_matrix(a: float, alpha: float, d: float, theta: float) -> np.ndarray:
    """Homogeneous matrix Rotz(theta) Transz(d) Transx(a) Rotx(alpha)."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def closest_point_to_lines(
    points: np.ndarray, directions: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares point for a bundle of 3D lines.

    points: (n, 3) one point per line; directions: (n, 3) unit directions.
    Returns (best_point, distances) where distances[i] is the distance from
    best_point to line i. Uses lstsq so nearly-parallel bundles still return
    a finite answer with honest residual distances.
    """
    points = np.asarray(points, dtype=float)
    dirs = np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    a = np.zeros((3, 3))
    b = np.zeros(3)
    for p, d in zip(points, dirs):
        proj = np.eye(3) - np.outer(d, d)
        a += proj
        b += proj @ p
    best, *_ = np.linalg.lstsq(a, b, rcond=None)
    dist = np.array(
        [np.linalg.norm((np.eye(3) - np.outer(d, d)) @ (best - p)) for p, d in zip(points, dirs)]
    )
    return best, dist
