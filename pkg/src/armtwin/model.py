"""Serial-chain robot descriptions: types, file format, validation, presets.

The on-disk format is a single JSON document (see docs/robots.md). An
explicit ``"angles": "radians"`` header is mandatory so a file authored in
degrees can never be loaded silently.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources

import numpy as np

from .errors import InvariantError, RobotSyntaxError, SchemaError, UnknownPreset
from .geometry import (
    Transform,
    closest_point_to_lines,
    dh_matrix,
    normalize_angle,
    rpy_to_rotation,
)

SOLVER_HINTS = ("planar2r", "analytic6dof", "numeric")
PRESET_NAMES = ("planar2r", "ur5", "tracker4dof")

MAX_JOINTS = 12
WRIST_CONCURRENCY_TOL = 1e-9

_TOP_KEYS = {"name", "angles", "solver", "joints", "tool_offset"}
_JOINT_KEYS = {"a", "alpha", "d", "theta_offset", "limit"}
_LIMIT_KEYS = {"min", "max"}
_TOOL_KEYS = {"position", "rpy"}

# Sign pattern of link twists the closed-form 6-DOF solver is derived for:
# yaw base, two parallel pitch links, roll-pitch-roll wrist.
_ANALYTIC_ALPHA = (math.pi / 2, 0.0, math.pi / 2, -math.pi / 2, math.pi / 2, 0.0)


@dataclass(frozen=True)
class DHRow:
    """Standard DH parameters for one revolute joint.

    a: link length (m), alpha: link twist (rad), d: link offset (m),
    theta_offset: constant added to the joint variable (rad).
    """

    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0


@dataclass(frozen=True)
class JointLimit:
    min: float  # radians
    max: float  # radians

    @property
    def span(self) -> float:
        return self.max - self.min

    def clamp(self, value: float) -> float:
        return min(max(value, self.min), self.max)

    def contains(self, value: float, tol: float = 1e-9) -> bool:
        return self.min - tol <= value <= self.max + tol


@dataclass(frozen=True)
class RobotModel:
    """A named serial chain of revolute joints.

    Immutable after construction; safe to share across threads and sessions.
    The tool offset is kept as position plus Euler angles (the file format's
    own representation) so descriptions round-trip bit-for-bit; the derived
    Transform is cached.
    """

    name: str
    joints: tuple[tuple[DHRow, JointLimit], ...]
    solver_hint: str
    tool_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    tool_rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @cached_property
    def tool_offset(self) -> Transform:
        return Transform(rpy_to_rotation(*self.tool_rpy), self.tool_position)

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def dh_rows(self) -> tuple[DHRow, ...]:
        return tuple(row for row, _ in self.joints)

    @property
    def limits(self) -> tuple[JointLimit, ...]:
        return tuple(lim for _, lim in self.joints)

    @property
    def joint_names(self) -> tuple[str, ...]:
        return tuple(f"joint{i + 1}" for i in range(self.joint_count))

    def limits_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lims = self.limits
        return (
            np.array([l.min for l in lims]),
            np.array([l.max for l in lims]),
        )

    def clamp(self, q: np.ndarray) -> np.ndarray:
        lo, hi = self.limits_arrays()
        return np.clip(np.asarray(q, dtype=float), lo, hi)

    def within_limits(self, q: np.ndarray, tol: float = 1e-9) -> bool:
        return all(lim.contains(v, tol) for v, lim in zip(q, self.limits))

    def home(self) -> np.ndarray:
        """All-zero configuration clamped into the joint limits."""
        return self.clamp(np.zeros(self.joint_count))


def joint_axes_at_zero(model: RobotModel) -> tuple[np.ndarray, np.ndarray]:
    """Axis lines of every joint at q = 0: (origins (n,3), directions (n,3)).

    Joint i rotates about the z axis of frame i-1; theta offsets are applied.
    """
    t = np.eye(4)
    origins, dirs = [], []
    for row, _ in model.joints:
        origins.append(t[:3, 3].copy())
        dirs.append(t[:3, 2].copy())
        t = t @ dh_matrix(row.a, row.alpha, row.d, row.theta_offset)
    return np.array(origins), np.array(dirs)


def spherical_wrist_error(model: RobotModel) -> float:
    """Max distance from the best common point to the last three joint axes.

    Zero (to numerical noise) iff axes 4, 5, 6 are concurrent; evaluated at
    the zero configuration, which is sufficient for a rigid chain.
    """
    origins, dirs = joint_axes_at_zero(model)
    _, dist = closest_point_to_lines(origins[3:6], dirs[3:6])
    return float(dist.max())


def validate_model(model: RobotModel) -> list[str]:
    """All invariant violations as human-readable strings; empty iff valid."""
    out: list[str] = []
    if not model.name or not isinstance(model.name, str):
        out.append("name: must be a non-empty string")
    if model.solver_hint not in SOLVER_HINTS:
        out.append(f"solver: unknown hint {model.solver_hint!r}")
    n = model.joint_count
    if n == 0:
        out.append("joints: must be non-empty")
        return out
    if n > MAX_JOINTS:
        out.append(f"joints: {n} joints exceeds the cap of {MAX_JOINTS}")

    for i, (row, lim) in enumerate(model.joints):
        label = f"joints[{i}]"
        for fname in ("a", "alpha", "d", "theta_offset"):
            if not math.isfinite(getattr(row, fname)):
                out.append(f"{label}.{fname}: must be finite")
        if row.a < 0:
            out.append(f"{label}.a: link length {row.a} must be >= 0")
        if math.isfinite(row.alpha) and not (-math.pi < row.alpha <= math.pi + 1e-12):
            out.append(f"{label}.alpha: {row.alpha} outside (-pi, pi]")
        if not (math.isfinite(lim.min) and math.isfinite(lim.max)):
            out.append(f"{label}.limit: bounds must be finite")
        elif lim.min >= lim.max:
            out.append(f"{label}.limit: min {lim.min} >= max {lim.max}")
        elif lim.span > math.tau + 1e-12:
            out.append(f"{label}.limit: span {lim.span:.6f} exceeds 2*pi")

    for label, triple in (("tool_position", model.tool_position), ("tool_rpy", model.tool_rpy)):
        if len(triple) != 3 or not all(math.isfinite(v) for v in triple):
            out.append(f"{label}: must be 3 finite numbers")

    if any(not math.isfinite(getattr(row, f)) for row, _ in model.joints for f in ("a", "alpha", "d", "theta_offset")):
        return out  # geometric checks below would only cascade NaNs

    if model.solver_hint == "planar2r":
        if n != 2:
            out.append(f"solver: planar2r requires exactly 2 joints, model has {n}")
        else:
            for i, (row, _) in enumerate(model.joints):
                if abs(row.alpha) > 1e-12 or abs(row.d) > 1e-12:
                    out.append(f"joints[{i}]: planar2r requires alpha = 0 and d = 0")
    elif model.solver_hint == "analytic6dof":
        if n != 6:
            out.append(f"solver: analytic6dof requires exactly 6 joints, model has {n}")
        else:
            err = spherical_wrist_error(model)
            if err > WRIST_CONCURRENCY_TOL:
                out.append(
                    "joints[3..5]: wrist axes 4,5,6 are not concurrent "
                    f"(max axis distance {err:.3e} m exceeds {WRIST_CONCURRENCY_TOL:.0e})"
                )
            out.extend(_analytic_pattern_violations(model))
    return out


def _analytic_pattern_violations(model: RobotModel) -> list[str]:
    """DH pattern required by the closed-form 6-DOF derivation.

    The closed form is per-family: yaw base over two parallel pitch links
    with an in-line roll-pitch-roll wrist. Arbitrary spherical-wrist chains
    fall back to the numeric solver.
    """
    out = []
    rows = model.dh_rows
    for i, expected in enumerate(_ANALYTIC_ALPHA):
        if abs(normalize_angle(rows[i].alpha - expected)) > 1e-9:
            out.append(f"joints[{i}].alpha: closed form requires {expected:+.6f}")
    for i in (1, 2, 4):
        if abs(rows[i].d) > 1e-12:
            out.append(f"joints[{i}].d: closed form requires 0")
    for i in (2, 3, 4, 5):
        if abs(rows[i].a) > 1e-12:
            out.append(f"joints[{i}].a: closed form requires 0")
    if rows[1].a <= 0:
        out.append("joints[1].a: upper-arm length must be > 0")
    if rows[3].d <= 0:
        out.append("joints[3].d: forearm length must be > 0")
    return out


def _require_valid(model: RobotModel) -> RobotModel:
    violations = validate_model(model)
    if violations:
        raise InvariantError(violations)
    return model


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise SchemaError(path, f"number must be finite, got {v}")
    return v


def _expect_keys(obj: dict, allowed: set, required: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(path, f"unknown key(s): {', '.join(sorted(unknown))}")
    missing = required - set(obj)
    if missing:
        raise SchemaError(path, f"missing key(s): {', '.join(sorted(missing))}")


def parse_robot_description(text: str) -> RobotModel:
    """Parse a robot description document into a validated RobotModel.

    Raises RobotSyntaxError on malformed JSON, SchemaError on unknown or
    missing fields (including the mandatory unit tag), InvariantError when
    the described chain violates a model invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RobotSyntaxError(exc.msg, exc.lineno, exc.colno) from exc

    if not isinstance(doc, dict):
        raise SchemaError("$", f"document must be an object, got {type(doc).__name__}")
    _expect_keys(doc, _TOP_KEYS, {"name", "angles", "solver", "joints"}, "$")

    if not isinstance(doc["name"], str) or not doc["name"]:
        raise SchemaError("$.name", "must be a non-empty string")
    if doc["angles"] != "radians":
        raise SchemaError("$.angles", f'unit tag must be "radians", got {doc["angles"]!r}')
    if doc["solver"] not in SOLVER_HINTS:
        raise SchemaError("$.solver", f"must be one of {SOLVER_HINTS}, got {doc['solver']!r}")
    if not isinstance(doc["joints"], list):
        raise SchemaError("$.joints", "must be an array")
    if not doc["joints"]:
        raise SchemaError("$.joints", "must be non-empty")

    joints = []
    for i, entry in enumerate(doc["joints"]):
        path = f"$.joints[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(path, "must be an object")
        _expect_keys(entry, _JOINT_KEYS, {"a", "alpha", "d", "theta_offset", "limit"}, path)
        limit = entry["limit"]
        if not isinstance(limit, dict):
            raise SchemaError(f"{path}.limit", "must be an object")
        _expect_keys(limit, _LIMIT_KEYS, _LIMIT_KEYS, f"{path}.limit")
        row = DHRow(
            a=_expect_number(entry["a"], f"{path}.a"),
            alpha=_expect_number(entry["alpha"], f"{path}.alpha"),
            d=_expect_number(entry["d"], f"{path}.d"),
            theta_offset=_expect_number(entry["theta_offset"], f"{path}.theta_offset"),
        )
        lim = JointLimit(
            min=_expect_number(limit["min"], f"{path}.limit.min"),
            max=_expect_number(limit["max"], f"{path}.limit.max"),
        )
        joints.append((row, lim))

    tool_position = (0.0, 0.0, 0.0)
    tool_rpy = (0.0, 0.0, 0.0)
    if "tool_offset" in doc:
        entry = doc["tool_offset"]
        path = "$.tool_offset"
        if not isinstance(entry, dict):
            raise SchemaError(path, "must be an object")
        _expect_keys(entry, _TOOL_KEYS, _TOOL_KEYS, path)
        pos = entry["position"]
        rpy = entry["rpy"]
        if not isinstance(pos, list) or len(pos) != 3:
            raise SchemaError(f"{path}.position", "must be an array of 3 numbers")
        if not isinstance(rpy, list) or len(rpy) != 3:
            raise SchemaError(f"{path}.rpy", "must be an array of 3 numbers")
        tool_position = tuple(_expect_number(v, f"{path}.position[{k}]") for k, v in enumerate(pos))
        tool_rpy = tuple(_expect_number(v, f"{path}.rpy[{k}]") for k, v in enumerate(rpy))

    model = RobotModel(
        name=doc["name"],
        joints=tuple(joints),
        solver_hint=doc["solver"],
        tool_position=tool_position,
        tool_rpy=tool_rpy,
    )
    return _require_valid(model)


def serialize_robot_description(model: RobotModel) -> str:
    """Serialize a RobotModel to the robot file format.

    Floats are written with shortest round-trip repr, so
    parse(serialize(m)) reproduces every field bit-for-bit.
    """
    doc = {
        "name": model.name,
        "angles": "radians",
        "solver": model.solver_hint,
        "joints": [
            {
                "a": row.a,
                "alpha": row.alpha,
                "d": row.d,
                "theta_offset": row.theta_offset,
                "limit": {"min": lim.min, "max": lim.max},
            }
            for row, lim in model.joints
        ],
    }
    if any(v != 0.0 for v in model.tool_position) or any(v != 0.0 for v in model.tool_rpy):
        doc["tool_offset"] = {
            "position": [float(v) for v in model.tool_position],
            "rpy": [float(v) for v in model.tool_rpy],
        }
    return json.dumps(doc, indent=2) + "\n"


def load_robot_file(path) -> RobotModel:
    """Read and parse a robot description file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_robot_description(fh.read())


def builtin_preset(name: str) -> RobotModel:
    """Return one of the embedded validated presets.

    Identical to parsing the shipped preset file of the same name.
    """
    if name not in PRESET_NAMES:
        raise UnknownPreset(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    text = resources.files("armtwin.presets").joinpath(f"{name}.robot").read_text("utf-8")
    return parse_robot_description(text)


def resolve_robot(spec: str) -> RobotModel:
    """Interpret a robot argument as a preset name or a file path."""
    if spec in PRESET_NAMES:
        return builtin_preset(spec)
    return load_robot_file(spec)
