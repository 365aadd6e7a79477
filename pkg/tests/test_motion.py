import math

import numpy as np
import pytest

from armtwin.errors import DimensionMismatch, NonPositiveDuration, TargetAtBase
from armtwin.kinematics import forward_kinematics
from armtwin.motion import (
    TrackingState,
    plan_joint_trajectory,
    sample_trajectory,
    standoff_point,
    track_target_step,
    validate_trajectory,
)


def test_constant_trajectory_for_equal_endpoints():
    q = np.array([0.4, -0.2, 1.0])
    traj = plan_joint_trajectory(q, q, 2.0, 0.1)
    assert np.all(traj.velocities == 0.0)
    assert np.all(traj.positions == q)
    assert validate_trajectory(traj) == []


def test_single_joint_midpoint_and_endpoint_velocities():
    traj = plan_joint_trajectory([0.0], [math.pi / 2], 2.0, 0.01)
    assert sample_trajectory(traj, 1.0)[0] == pytest.approx(math.pi / 4, abs=1e-15)
    assert traj.velocity(0.0)[0] == 0.0
    assert traj.velocity(2.0)[0] == 0.0


def test_endpoint_exactness():
    q0 = np.array([0.1, -0.7])
    q1 = np.array([0.3, 0.9])
    traj = plan_joint_trajectory(q0, q1, 1.5, 0.01)
    assert np.array_equal(sample_trajectory(traj, 0.0), q0)
    assert np.array_equal(sample_trajectory(traj, 1.5), q1)
    assert np.array_equal(sample_trajectory(traj, -1.0), q0)
    assert np.array_equal(sample_trajectory(traj, 99.0), q1)


def test_peak_velocity_bound(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        q0 = rng.uniform(-3, 3, n)
        q1 = rng.uniform(-3, 3, n)
        duration = float(rng.uniform(0.3, 5.0))
        traj = plan_joint_trajectory(q0, q1, duration, 0.01)
        bound = 1.5 * np.abs(q1 - q0) / duration + 1e-9
        assert np.all(np.abs(traj.velocities) <= bound)
        # max per-sample position jump obeys the peak-velocity bound
        jumps = np.abs(np.diff(traj.positions, axis=0))
        dt = np.diff(traj.times)[:, None]
        assert np.all(jumps <= bound * dt + 1e-9)


def test_trajectory_invariants_random_endpoints(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        q0 = rng.uniform(-3, 3, n)
        q1 = rng.uniform(-3, 3, n)
        traj = plan_joint_trajectory(q0, q1, float(rng.uniform(0.3, 4.0)), 0.02)
        assert validate_trajectory(traj) == []
        assert traj.times[0] == 0.0
        assert traj.times[-1] == traj.duration


def test_coarse_dt_refined_to_keep_c1_consistency():
    # a fast short move at a broadcast-rate dt would violate the trapezoid
    # bound without refinement
    traj = plan_joint_trajectory([0.0], [0.1], 0.5, 1.0 / 30.0)
    assert validate_trajectory(traj) == []
    assert np.max(np.diff(traj.times)) <= 1.0 / 30.0 + 1e-12


def test_sampling_continuity(rng):
    traj = plan_joint_trajectory(rng.uniform(-3, 3, 4), rng.uniform(-3, 3, 4), 2.0, 0.01)
    for t in rng.uniform(0, 2.0, 100):
        gap = np.abs(sample_trajectory(traj, t + 1e-6) - sample_trajectory(traj, t))
        assert np.all(gap < 1e-5)


def test_midpoint_symmetry(rng):
    for _ in range(100):
        q0 = rng.uniform(-3, 3, 5)
        q1 = rng.uniform(-3, 3, 5)
        duration = float(rng.uniform(0.5, 3.0))
        traj = plan_joint_trajectory(q0, q1, duration, 0.01)
        mid = sample_trajectory(traj, duration / 2.0)
        assert np.max(np.abs(mid - (q0 + q1) / 2.0)) < 1e-12


def test_bad_arguments():
    with pytest.raises(DimensionMismatch):
        plan_joint_trajectory([0.0], [0.0, 1.0], 1.0, 0.1)
    with pytest.raises(NonPositiveDuration):
        plan_joint_trajectory([0.0], [1.0], 0.0, 0.1)
    with pytest.raises(NonPositiveDuration):
        plan_joint_trajectory([0.0], [1.0], 1.0, -0.1)
    with pytest.raises(NonPositiveDuration):
        plan_joint_trajectory([0.0], [1.0], 1.0, 2.0)


def test_tracking_zero_delta_when_satisfied(tracker4dof):
    q = np.array([0.0, 0.6, -0.8, 0.4])
    state = TrackingState(enabled=True, standoff=0.1)
    ee = forward_kinematics(tracker4dof, q).position
    # place the target so the standoff point equals the current end effector
    from armtwin.kinematics import joint_origins

    anchor = joint_origins(tracker4dof, q)[tracker4dof.joint_count - 2]
    direction = (ee - anchor) / np.linalg.norm(ee - anchor)
    state.target = ee + 0.1 * direction
    q_next = track_target_step(tracker4dof, state, q)
    assert np.max(np.abs(q_next - q)) < 1e-7


def test_tracking_step_bounded_and_in_limits(tracker4dof, rng):
    lo, hi = tracker4dof.limits_arrays()
    for _ in range(100):
        q = rng.uniform(lo, hi)
        state = TrackingState(
            target=rng.uniform(-0.8, 0.8, 3), standoff=float(rng.uniform(0, 0.2)), enabled=True
        )
        try:
            q_next = track_target_step(tracker4dof, state, q, max_step=0.05)
        except TargetAtBase:
            continue
        assert np.max(np.abs(q_next - q)) <= 0.05 + 1e-12
        assert tracker4dof.within_limits(q_next)


def test_tracking_converges_on_stationary_target(tracker4dof):
    state = TrackingState(target=np.array([0.35, 0.2, 0.3]), standoff=0.1, enabled=True)
    q = tracker4dof.home()
    for _ in range(200):
        q = track_target_step(tracker4dof, state, q, max_step=0.05)
    goal = standoff_point(tracker4dof, state, q)
    ee = forward_kinematics(tracker4dof, q).position
    assert np.linalg.norm(ee - goal) < 1e-3


def test_tracking_error_decreases_after_small_target_move(tracker4dof):
    state = TrackingState(target=np.array([0.3, 0.25, 0.35]), standoff=0.1, enabled=True)
    q = tracker4dof.home()
    for _ in range(200):
        q = track_target_step(tracker4dof, state, q, max_step=0.05)
    state.target = state.target + np.array([0.01, 0.0, 0.0])

    def dist(qv):
        return np.linalg.norm(
            forward_kinematics(tracker4dof, qv).position - standoff_point(tracker4dof, state, qv)
        )

    errors = [dist(q)]
    for _ in range(50):
        q = track_target_step(tracker4dof, state, q, max_step=0.05)
        errors.append(dist(q))
    assert errors[-1] < 1e-4
    assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))


def test_target_at_approach_origin_raises(tracker4dof):
    q = np.array([0.0, 0.5, -0.5, 0.2])
    from armtwin.kinematics import joint_origins

    anchor = joint_origins(tracker4dof, q)[tracker4dof.joint_count - 2]
    state = TrackingState(target=anchor, standoff=0.1, enabled=True)
    with pytest.raises(TargetAtBase):
        track_target_step(tracker4dof, state, q)


def test_tracking_state_validation():
    with pytest.raises(ValueError):
        TrackingState(target=(float("nan"), 0, 0))
    with pytest.raises(ValueError):
        TrackingState(standoff=-0.1)
