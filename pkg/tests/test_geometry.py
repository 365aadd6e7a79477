import math

import numpy as np
import pytest

from armtwin.errors import NonOrthonormal
from armtwin.geometry import (
    Pose,
    Transform,
    closest_point_to_lines,
    normalize_angle,
    pose_to_transform,
    rotation_distance,
    rotation_x,
    rotation_y,
    rotation_z,
    rpy_to_rotation,
    transform_to_pose,
)


def test_normalize_angle_range():
    for x in np.linspace(-20, 20, 2001):
        r = normalize_angle(x)
        assert -math.pi < r <= math.pi
        # same point on the circle
        assert abs(math.sin(r) - math.sin(x)) < 1e-12
        assert abs(math.cos(r) - math.cos(x)) < 1e-12


def test_normalize_angle_keeps_pi():
    assert normalize_angle(math.pi) == math.pi
    assert normalize_angle(-math.pi) == math.pi
    assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)


def test_transform_compose_inverse(rng):
    for _ in range(50):
        r = rpy_to_rotation(*rng.uniform(-math.pi, math.pi, 3))
        t = Transform(r, rng.uniform(-2, 2, 3))
        identity = t @ t.inverse()
        assert rotation_distance(identity.rotation, np.eye(3)) < 1e-12
        assert np.linalg.norm(identity.position) < 1e-12


def test_transform_immutable():
    t = Transform.identity()
    with pytest.raises(ValueError):
        t.rotation[0, 0] = 2.0


def test_pose_identity_round_trip():
    pose = Pose((0, 0, 0), (0, 0, 0))
    t = pose_to_transform(pose)
    assert rotation_distance(t.rotation, np.eye(3)) == 0.0
    back = transform_to_pose(t)
    assert back.orientation == (0.0, 0.0, 0.0)


def test_pure_z_rotation_matrix():
    t = pose_to_transform(Pose((0, 0, 0), (0, 0, math.radians(90))))
    r = t.rotation
    assert abs(r[0, 0]) < 1e-15
    assert r[1, 0] == pytest.approx(1.0)
    assert r[0, 1] == pytest.approx(-1.0)
    assert abs(r[1, 1]) < 1e-15


def test_rpy_round_trip_rotation_equality(rng):
    # round trip must reproduce the rotation matrix even when the Euler
    # triple itself is not unique
    for _ in range(1000):
        angles = rng.uniform(-math.pi, math.pi, 3)
        r = rpy_to_rotation(*angles)
        pose = transform_to_pose(Transform(r, np.zeros(3)))
        r2 = pose_to_transform(pose).rotation
        assert rotation_distance(r, r2) < 1e-9


def test_gimbal_lock_sets_psi_zero():
    for sign in (1.0, -1.0):
        r = rpy_to_rotation(0.4, sign * math.pi / 2, 0.9)
        pose = transform_to_pose(Transform(r, np.zeros(3)))
        assert pose.psi == 0.0
        assert pose.theta == pytest.approx(sign * math.pi / 2)
        r2 = pose_to_transform(pose).rotation
        assert rotation_distance(r, r2) < 1e-9


def test_non_orthonormal_rejected():
    bad = np.eye(3)
    bad[0, 0] = 1.1
    with pytest.raises(NonOrthonormal):
        transform_to_pose(Transform(bad, np.zeros(3)))


def test_rotation_primitives_match_axis_definitions():
    v = np.array([0.0, 1.0, 0.0])
    assert np.allclose(rotation_x(math.pi / 2) @ v, [0, 0, 1])
    assert np.allclose(rotation_z(math.pi / 2) @ [1, 0, 0], [0, 1, 0])
    assert np.allclose(rotation_y(math.pi / 2) @ [0, 0, 1], [1, 0, 0])


def test_closest_point_concurrent_lines():
    # three lines through (1, 2, 3) along different directions
    p = np.array([1.0, 2.0, 3.0])
    dirs = np.array([[1, 0, 0], [0, 1, 0], [1, 1, 1]], dtype=float)
    points = np.array([p - 2 * d / np.linalg.norm(d) for d in dirs])
    best, dist = closest_point_to_lines(points, dirs)
    assert np.allclose(best, p, atol=1e-9)
    assert dist.max() < 1e-9


def test_closest_point_skew_lines_reports_distance():
    points = np.array([[0, 0, 0], [0, 0, 1.0], [1.0, 0, 0.5]])
    dirs = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    _, dist = closest_point_to_lines(points, dirs)
    assert dist.max() > 0.1
