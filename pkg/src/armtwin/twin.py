"""Digital-twin controller and wire protocol, transport-free.

The controller owns the authoritative arm state and is driven by explicit
timestamps, so the same command sequence with the same tick times always
produces the same state trajectory. The network layer in server.py only
moves frames; everything testable lives here.

Wire protocol: one UTF-8 JSON object per text frame, a documented subset of
the rosbridge v2 op set.

  {"op": "subscribe",   "topic": ..., "id"?: ...}
  {"op": "unsubscribe", "topic": ..., "id"?: ...}
  {"op": "advertise",   "topic": ..., "type"?: ..., "id"?: ...}
  {"op": "publish",     "topic": ..., "msg": {...}, "id"?: ...}
  {"op": "status",      "level": "none"|"error", "text": ..., "id"?: ...}

Every inbound frame yields a state effect, a status reply, or both; a frame
carrying an id always gets a status answer and malformed input never tears
the connection down.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArmTwinError, BadPayload, IkFailure, TargetAtBase
from .geometry import pose_to_transform
from .ik import select_solution, solve_ik
from .kinematics import PoseCommand, pose_from_command
from .model import RobotModel, serialize_robot_description
from .motion import (
    DEFAULT_MAX_STEP,
    DEFAULT_STANDOFF,
    TrackingState,
    Trajectory,
    plan_joint_trajectory,
    track_target_step,
)

TOPIC_JOINT_STATES = "/joint_states"
TOPIC_ROBOT_DESCRIPTION = "/robot_description"
TOPIC_CMD_JOINT = "/cmd/joint"
TOPIC_CMD_POSE = "/cmd/pose"
TOPIC_CMD_TRACK = "/cmd/track"
TOPIC_CMD_STOP = "/cmd/stop"

COMMAND_TOPICS = (TOPIC_CMD_JOINT, TOPIC_CMD_POSE, TOPIC_CMD_TRACK, TOPIC_CMD_STOP)
KNOWN_TOPICS = (TOPIC_JOINT_STATES, TOPIC_ROBOT_DESCRIPTION) + COMMAND_TOPICS

VALID_OPS = ("advertise", "subscribe", "unsubscribe", "publish", "status")

POSE_SPEED = 0.5  # rad/s used to scale pose-command trajectory durations
MIN_POSE_DURATION = 0.5  # s

MODE_IDLE = "idle"
MODE_TRAJECTORY = "trajectory"
MODE_TRACKING = "tracking"


@dataclass
class SessionState:
    """Per-connection bookkeeping owned by the transport layer."""

    peer: str
    connected_at: float
    subscriptions: set = field(default_factory=set)


def status_frame(level: str, text: str, msg_id=None) -> dict:
    frame = {"op": "status", "level": level, "text": text}
    if msg_id is not None:
        frame["id"] = msg_id
    return frame


def publish_frame(topic: str, msg: dict) -> dict:
    return {"op": "publish", "topic": topic, "msg": msg}


def _finite_number(payload: dict, key: str) -> float:
    if key not in payload:
        raise BadPayload(f"missing field {key!r}")
    value = payload[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BadPayload(f"field {key!r} must be a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise BadPayload(f"field {key!r} must be finite, got {value}")
    return value


class TwinController:
    """Authoritative arm state plus the three command patterns: direct joint
    setpoints, pose commands resolved through IK and a planned trajectory,
    and continuous target tracking."""

    def __init__(
        self,
        model: RobotModel,
        rate_hz: float = 30.0,
        max_step: float = DEFAULT_MAX_STEP,
    ):
        if rate_hz <= 0:
            raise ValueError(f"rate_hz must be positive, got {rate_hz}")
        self.model = model
        self.rate_hz = float(rate_hz)
        self.max_step = float(max_step)
        self.current = model.home()
        self.mode = MODE_IDLE
        self.trajectory: Trajectory | None = None
        self.trajectory_start: float | None = None
        self.tracking = TrackingState()
        self.last_stamp = 0.0

    # -- command handling ---------------------------------------------------

    def apply_command(self, topic: str, msg) -> None:
        """Execute one command payload; raises BadPayload or IkFailure and
        leaves the state untouched on any rejection."""
        if not isinstance(msg, dict):
            raise BadPayload(f"command payload must be an object, got {type(msg).__name__}")
        if topic == TOPIC_CMD_JOINT:
            self._cmd_joint(msg)
        elif topic == TOPIC_CMD_POSE:
            self._cmd_pose(msg)
        elif topic == TOPIC_CMD_TRACK:
            self._cmd_track(msg)
        elif topic == TOPIC_CMD_STOP:
            self._cmd_stop()
        else:
            raise BadPayload(f"{topic!r} is not a command topic")

    def _cmd_joint(self, msg: dict) -> None:
        index = msg.get("index")
        if isinstance(index, bool) or not isinstance(index, int):
            raise BadPayload("field 'index' must be an integer")
        if not 0 <= index < self.model.joint_count:
            raise BadPayload(
                f"joint index {index} out of range for {self.model.joint_count} joints"
            )
        position = _finite_number(msg, "position")
        q = self.current.copy()
        q[index] = self.model.limits[index].clamp(position)
        self.current = q
        self._enter_idle()

    def _cmd_pose(self, msg: dict) -> None:
        values = [_finite_number(msg, key) for key in PoseCommand.FIELD_ORDER]
        pose = pose_from_command(PoseCommand(*values))
        try:
            solutions = solve_ik(
                self.model, pose_to_transform(pose)
                if self.model.solver_hint == "analytic6dof"
                else pose,
                seed=self.current,
            )
            goal = select_solution(solutions, self.current)
        except ArmTwinError as exc:
            raise IkFailure(f"pose command unsolvable: {exc}") from exc
        max_delta = float(np.max(np.abs(goal - self.current)))
        duration = max(MIN_POSE_DURATION, max_delta / POSE_SPEED)
        self.trajectory = plan_joint_trajectory(
            self.current, goal, duration, 1.0 / self.rate_hz
        )
        self.trajectory_start = None  # armed; starts on the next tick
        self.mode = MODE_TRAJECTORY
        self.tracking.enabled = False

    def _cmd_track(self, msg: dict) -> None:
        enable = msg.get("enable", True)
        if not isinstance(enable, bool):
            raise BadPayload("field 'enable' must be a boolean")
        if not enable:
            self._enter_idle()
            return
        target = np.array([_finite_number(msg, k) for k in ("x", "y", "z")])
        standoff = DEFAULT_STANDOFF
        if "standoff" in msg:
            standoff = _finite_number(msg, "standoff")
            if standoff < 0:
                raise BadPayload(f"field 'standoff' must be >= 0, got {standoff}")
        self.tracking = TrackingState(target=target, standoff=standoff, enabled=True)
        self.trajectory = None
        self.trajectory_start = None
        self.mode = MODE_TRACKING

    def _cmd_stop(self) -> None:
        self._enter_idle()

    def _enter_idle(self) -> None:
        self.mode = MODE_IDLE
        self.trajectory = None
        self.trajectory_start = None
        self.tracking.enabled = False

    # -- time stepping ------------------------------------------------------

    def tick(self, now: float) -> None:
        """Advance the state to timestamp now (monotonic seconds)."""
        self.last_stamp = float(now)
        if self.mode == MODE_TRAJECTORY and self.trajectory is not None:
            if self.trajectory_start is None:
                self.trajectory_start = float(now)
            elapsed = now - self.trajectory_start
            self.current = self.trajectory.sample(elapsed)
            if elapsed >= self.trajectory.duration:
                self._enter_idle()
        elif self.mode == MODE_TRACKING and self.tracking.enabled:
            try:
                self.current = track_target_step(
                    self.model, self.tracking, self.current, self.max_step
                )
            except TargetAtBase:
                pass  # direction undefined; hold position until the target moves

    def joint_state_msg(self) -> dict:
        return {
            "name": list(self.model.joint_names),
            "position": [float(v) for v in self.current],
            "stamp": self.last_stamp,
        }

    def hello_frames(self) -> list[dict]:
        """Frames pushed to a client at connect: topic advertisements plus
        the robot description, so panels can discover joints and limits."""
        frames = [
            {"op": "advertise", "topic": TOPIC_JOINT_STATES, "type": "sensor_msgs/JointState"},
            {"op": "advertise", "topic": TOPIC_CMD_JOINT, "type": "armtwin/JointCommand"},
            {"op": "advertise", "topic": TOPIC_CMD_POSE, "type": "armtwin/PoseCommand"},
            {"op": "advertise", "topic": TOPIC_CMD_TRACK, "type": "armtwin/TrackCommand"},
            {"op": "advertise", "topic": TOPIC_CMD_STOP, "type": "armtwin/Stop"},
            publish_frame(
                TOPIC_ROBOT_DESCRIPTION, json.loads(serialize_robot_description(self.model))
            ),
        ]
        return frames


class TwinProtocol:
    """Stateless frame handling glue between sessions and the controller."""

    def __init__(self, controller: TwinController):
        self.controller = controller

    def handle_client_message(self, session: SessionState, raw) -> list[dict]:
        """Process one inbound frame; returns the frames to send back to
        this session. Never raises: hostile input becomes a status frame."""
        try:
            return self._dispatch(session, raw)
        except Exception as exc:  # protocol totality: nothing may escape
            return [status_frame("error", f"internal error: {type(exc).__name__}: {exc}")]

    def _dispatch(self, session: SessionState, raw) -> list[dict]:
        if isinstance(raw, (bytes, bytearray)):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                return [status_frame("error", "frame is not valid UTF-8")]
        try:
            frame = json.loads(raw)
        except json.JSONDecodeError as exc:
            return [status_frame("error", f"frame is not valid JSON: {exc.msg}")]
        if not isinstance(frame, dict):
            return [status_frame("error", "frame must be a JSON object")]

        msg_id = frame.get("id")
        if msg_id is not None and not isinstance(msg_id, (str, int)):
            return [status_frame("error", "field 'id' must be a string or integer")]

        op = frame.get("op")
        if op not in VALID_OPS:
            return [status_frame("error", f"unknown op {op!r}", msg_id)]

        if op == "status":
            return []  # client-side status frames are informational

        topic = frame.get("topic")
        if not isinstance(topic, str) or not topic:
            return [status_frame("error", f"op {op!r} requires a topic", msg_id)]

        if op == "subscribe":
            if topic not in KNOWN_TOPICS:
                return [status_frame("error", f"unknown topic {topic!r}", msg_id)]
            session.subscriptions.add(topic)
            return self._ok(msg_id)

        if op == "unsubscribe":
            session.subscriptions.discard(topic)
            return self._ok(msg_id)

        if op == "advertise":
            if topic in (TOPIC_JOINT_STATES, TOPIC_ROBOT_DESCRIPTION):
                return [
                    status_frame("error", f"{topic} is published by the server only", msg_id)
                ]
            return self._ok(msg_id)

        # op == "publish"
        if topic not in COMMAND_TOPICS:
            return [status_frame("error", f"{topic!r} is not a command topic", msg_id)]
        if "msg" not in frame:
            return [status_frame("error", "publish requires a 'msg' payload", msg_id)]
        try:
            self.controller.apply_command(topic, frame["msg"])
        except (BadPayload, IkFailure) as exc:
            return [status_frame("error", str(exc), msg_id)]
        return self._ok(msg_id)

    @staticmethod
    def _ok(msg_id) -> list[dict]:
        if msg_id is None:
            return []
        return [status_frame("none", "ok", msg_id)]
