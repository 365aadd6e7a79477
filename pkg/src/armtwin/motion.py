"""Joint-space trajectory generation and the target-tracking stepper."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonPositiveDuration, TargetAtBase
from .ik import dls_refine
from .kinematics import joint_origins
from .model import RobotModel

C1_TRAPEZOID_TOL = 1e-6
DEFAULT_STANDOFF = 0.10
DEFAULT_MAX_STEP = 0.05


@dataclass(frozen=True)
class Trajectory:
    """Cubic point-to-point blend with zero endpoint velocities.

    q(t) = q_from + (3 (t/T)^2 - 2 (t/T)^3) * (q_to - q_from)

    waypoint arrays are a sampling of the closed form; evaluation goes
    through sample/velocity which use the exact polynomial.
    """

    q_from: np.ndarray
    q_to: np.ndarray
    duration: float
    times: np.ndarray  # (m,), strictly increasing, 0 .. duration
    positions: np.ndarray  # (m, n)
    velocities: np.ndarray  # (m, n)

    def __post_init__(self):
        for name in ("q_from", "q_to", "times", "positions", "velocities"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def delta(self) -> np.ndarray:
        return self.q_to - self.q_from

    def sample(self, t: float) -> np.ndarray:
        """Exact cubic evaluation; clamps to the endpoints outside [0, T]."""
        if t <= 0.0:
            return self.q_from.copy()
        if t >= self.duration:
            return self.q_to.copy()
        tau = t / self.duration
        blend = (3.0 - 2.0 * tau) * tau * tau
        return self.q_from + blend * self.delta

    def velocity(self, t: float) -> np.ndarray:
        if t <= 0.0 or t >= self.duration:
            return np.zeros_like(self.q_from)
        tau = t / self.duration
        return 6.0 * tau * (1.0 - tau) / self.duration * self.delta


def plan_joint_trajectory(
    q_from, q_to, duration: float, dt: float
) -> Trajectory:
    """Plan a cubic blend between two configurations.

    Waypoints are sampled every dt plus the exact endpoint; the step is
    refined below dt when needed so consecutive waypoints stay consistent
    with the trapezoid of their velocities to C1_TRAPEZOID_TOL (the cubic
    makes that bound exactly h^3 * |dq| / T^3 per step).
    """
    q_from = np.asarray(q_from, dtype=float).reshape(-1)
    q_to = np.asarray(q_to, dtype=float).reshape(-1)
    if q_from.shape != q_to.shape:
        raise DimensionMismatch(
            f"endpoint lengths differ: {q_from.shape[0]} vs {q_to.shape[0]}"
        )
    if not (duration > 0.0) or not math.isfinite(duration):
        raise NonPositiveDuration(f"duration must be positive, got {duration}")
    if not (dt > 0.0) or not math.isfinite(dt):
        raise NonPositiveDuration(f"dt must be positive, got {dt}")
    if dt > duration:
        raise NonPositiveDuration(f"dt {dt} exceeds duration {duration}")

    max_delta = float(np.max(np.abs(q_to - q_from))) if q_from.size else 0.0
    step = dt
    if max_delta > 0.0:
        step_cap = duration * (0.5 * C1_TRAPEZOID_TOL / max_delta) ** (1.0 / 3.0)
        step = min(dt, step_cap)

    count = max(1, math.ceil(duration / step - 1e-9))
    times = np.arange(count) * (duration / count)
    times = np.append(times, duration)

    traj = Trajectory(
        q_from=q_from,
        q_to=q_to,
        duration=float(duration),
        times=times,
        positions=np.empty(0),
        velocities=np.empty(0),
    )
    positions = np.vstack([traj.sample(t) for t in times])
    velocities = np.vstack([traj.velocity(t) for t in times])
    return Trajectory(q_from, q_to, float(duration), times, positions, velocities)


def sample_trajectory(traj: Trajectory, t: float) -> np.ndarray:
    """Joint vector at time t (exact cubic; endpoint-clamped outside)."""
    return traj.sample(t)


def validate_trajectory(traj: Trajectory, limits=None) -> list[str]:
    """Check the trajectory type invariants; empty list iff all hold."""
    out = []
    t = traj.times
    if t[0] != 0.0:
        out.append(f"times: first sample {t[0]} != 0")
    if abs(t[-1] - traj.duration) > 0.0:
        out.append(f"times: last sample {t[-1]} != duration {traj.duration}")
    if np.any(np.diff(t) <= 0):
        out.append("times: not strictly increasing")
    dq = np.diff(traj.positions, axis=0)
    vsum = 0.5 * (traj.velocities[:-1] + traj.velocities[1:])
    gap = dq - vsum * np.diff(t)[:, None]
    worst = float(np.max(np.abs(gap))) if gap.size else 0.0
    if worst > C1_TRAPEZOID_TOL:
        out.append(f"C1: waypoint spacing inconsistent with velocities by {worst:.3e}")
    if limits is not None:
        lo = np.array([l.min for l in limits])
        hi = np.array([l.max for l in limits])
        if np.any(traj.positions < lo - 1e-9) or np.any(traj.positions > hi + 1e-9):
            out.append("positions: waypoint outside joint limits")
    return out


@dataclass
class TrackingState:
    """Target-following state owned by the controller loop."""

    target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    standoff: float = DEFAULT_STANDOFF
    enabled: bool = False
    last_command: np.ndarray | None = None

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.target)):
            raise ValueError(f"tracking target must be finite, got {self.target}")
        if self.standoff < 0.0 or not math.isfinite(self.standoff):
            raise ValueError(f"standoff must be >= 0, got {self.standoff}")


def standoff_point(model: RobotModel, state: TrackingState, current) -> np.ndarray:
    """Goal position for the end effector: the target backed off along the
    approach line from the second-to-last joint origin.

    Raises TargetAtBase when the target coincides with the approach origin.
    """
    origins = joint_origins(model, current)
    # joint k rotates about the frame k-1 axis; the second-to-last joint's
    # origin is therefore row n-2 of the origin table.
    anchor = origins[model.joint_count - 2]
    offset = state.target - anchor
    dist = float(np.linalg.norm(offset))
    if dist < 1e-6:
        raise TargetAtBase(
            f"target within {dist:.2e} m of the approach origin; direction undefined"
        )
    return state.target - state.standoff * (offset / dist)


def track_target_step(
    model: RobotModel,
    state: TrackingState,
    current,
    max_step: float = DEFAULT_MAX_STEP,
) -> np.ndarray:
    """One bounded tracking update toward the standoff point.

    Runs a short position-only DLS refinement (at most 5 iterations) from
    the current configuration, then clamps the per-joint change to max_step
    and the result to the joint limits.
    """
    if not state.enabled:
        raise ValueError("tracking step requested while tracking is disabled")
    if max_step <= 0.0:
        raise ValueError(f"max_step must be positive, got {max_step}")
    current = np.asarray(current, dtype=float).reshape(-1)
    if current.shape[0] != model.joint_count:
        raise DimensionMismatch(
            f"current has {current.shape[0]} values for a {model.joint_count}-joint model"
        )
    goal = standoff_point(model, state, current)
    proposal = dls_refine(model, goal, current, iters=5)
    delta = np.clip(proposal - current, -max_step, max_step)
    return model.clamp(current + delta)
