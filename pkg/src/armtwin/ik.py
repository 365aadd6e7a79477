"""Inverse kinematics: geometric planar 2R, closed-form 6-DOF for
spherical-wrist arms, and damped-least-squares numeric IK for any chain.

Every solver verifies its own output through forward kinematics before
returning, so a returned solution is a checked postcondition, not a hope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySet,
    NoConvergence,
    OutOfWorkspace,
    SingularTarget,
    Unreachable,
    WrongSolverHint,
)
from .geometry import (
    Pose,
    Transform,
    dh_matrix,
    normalize_angle,
    pose_to_transform,
    require_rotation,
    rotation_distance,
)
from .kinematics import forward_kinematics, frame_matrices
from .model import RobotModel, _analytic_pattern_violations

PLANAR_FK_TOL = 1e-9
ANALYTIC_FK_TOL = 1e-6
REACH_SLACK = 1e-12
BRANCH_MERGE_TOL = 1e-9

_SHOULDER_ORDINAL = {"right": 0, "left": 1}
_ELBOW_ORDINAL = {"up": 0, "down": 1}
_WRIST_ORDINAL = {"noflip": 0, "flip": 1}


@dataclass(frozen=True)
class BranchLabel:
    """One consistent choice of the +/- square-root signs in a closed-form
    derivation. Planar solutions carry only the elbow field; 6-DOF solutions
    carry all three; numeric solutions carry none."""

    elbow: str | None = None
    shoulder: str | None = None
    wrist: str | None = None

    def ordinal(self) -> int:
        total = 0
        if self.shoulder is not None:
            total += 4 * _SHOULDER_ORDINAL[self.shoulder]
        if self.elbow is not None:
            total += 2 * _ELBOW_ORDINAL[self.elbow]
        if self.wrist is not None:
            total += _WRIST_ORDINAL[self.wrist]
        return total

    def __str__(self) -> str:
        parts = []
        if self.shoulder is not None:
            parts.append(f"shoulder-{self.shoulder}")
        if self.elbow is not None:
            parts.append(f"elbow-{self.elbow}")
        if self.wrist is not None:
            parts.append(f"wrist-{self.wrist}")
        return "/".join(parts) if parts else "numeric"


NUMERIC_BRANCH = BranchLabel()


@dataclass(frozen=True)
class IkSolution:
    q: np.ndarray
    branch: BranchLabel

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        q.flags.writeable = False
        object.__setattr__(self, "q", q)


@dataclass
class IkSolutionSet:
    """All branches for one request plus the selected index.

    rejected records branches dropped before return, each with a reason
    (joint limit, unreachable elbow, failed FK verification).
    """

    solutions: tuple[IkSolution, ...]
    selected: int | None = None
    rejected: tuple[tuple[BranchLabel, str], ...] = ()

    def __len__(self) -> int:
        return len(self.solutions)

    @property
    def selected_q(self) -> np.ndarray | None:
        if self.selected is None:
            return None
        return self.solutions[self.selected].q


def planar_fk(l1: float, l2: float, th1: float, th2: float) -> tuple[float, float]:
    """Tip position of a 2R chain in its plane."""
    return (
        l1 * math.cos(th1) + l2 * math.cos(th1 + th2),
        l1 * math.sin(th1) + l2 * math.sin(th1 + th2),
    )


def ik_planar_2r(l1: float, l2: float, target) -> IkSolutionSet:
    """Both elbow branches for a planar 2R chain reaching (px, py).

    Solutions are FK-verified to PLANAR_FK_TOL. Coincident branches at the
    reach boundary (|sin theta2| < 1e-9) are merged. No joint limits apply
    at this level; filtering against a model happens in solve_ik.
    """
    if not (l1 > 0 and l2 > 0):
        raise ValueError(f"link lengths must be positive, got {l1}, {l2}")
    px, py = float(target[0]), float(target[1])
    if not (math.isfinite(px) and math.isfinite(py)):
        raise ValueError(f"target must be finite, got ({px}, {py})")

    rho = math.hypot(px, py)
    outer = l1 + l2
    inner = abs(l1 - l2)
    if rho > outer + REACH_SLACK:
        raise Unreachable(
            f"target radius {rho:.6f} m exceeds reach {outer:.6f} m", rho - outer
        )
    if rho < inner - REACH_SLACK:
        raise Unreachable(
            f"target radius {rho:.6f} m is inside the inner annulus {inner:.6f} m",
            inner - rho,
        )

    c2 = (rho * rho - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    c2 = min(1.0, max(-1.0, c2))
    s2_mag = math.sqrt(max(0.0, 1.0 - c2 * c2))

    branches = [("up", -s2_mag)]
    if s2_mag >= 1e-9:
        branches.append(("down", s2_mag))

    solutions = []
    rejected = []
    heading = math.atan2(py, px)
    for elbow, s2 in branches:
        th2 = math.atan2(s2, c2)
        th1 = normalize_angle(heading - math.atan2(l2 * s2, l1 + l2 * c2))
        th2 = normalize_angle(th2)
        fx, fy = planar_fk(l1, l2, th1, th2)
        err = math.hypot(fx - px, fy - py)
        label = BranchLabel(elbow=elbow)
        if err < PLANAR_FK_TOL:
            solutions.append(IkSolution(np.array([th1, th2]), label))
        else:
            rejected.append((label, f"forward-kinematics check failed ({err:.3e} m)"))
    return IkSolutionSet(tuple(solutions), rejected=tuple(rejected))


def _rotation_block(row, theta: float) -> np.ndarray:
    return dh_matrix(row.a, row.alpha, row.d, theta)[:3, :3]


def _limit_violation(model: RobotModel, q: np.ndarray) -> str | None:
    for i, (value, lim) in enumerate(zip(q, model.limits)):
        if not lim.contains(value):
            return f"joint {i + 1} value {value:.6f} outside [{lim.min:.6f}, {lim.max:.6f}]"
    return None


def ik_analytic_6dof(model: RobotModel, target: Transform) -> IkSolutionSet:
    """All closed-form branches for a yaw/pitch/pitch arm with an in-line
    roll-pitch-roll wrist.

    The wrist-center position fixes the first three joints (base heading,
    then a planar two-link subproblem); the residual rotation taken into
    frame 3 factors as Rz(q4) Ry(q5) Rz(q6), giving the last three. Each of
    the three sign choices doubles the branch count: shoulder {right, left},
    elbow {up, down}, wrist {noflip, flip}, so up to 8 candidates. Branches
    outside the joint limits are dropped with a per-branch reason; survivors
    are FK-verified to ANALYTIC_FK_TOL before return.
    """
    if model.solver_hint != "analytic6dof":
        raise WrongSolverHint(
            f"model {model.name!r} has solver hint {model.solver_hint!r}, not analytic6dof"
        )
    pattern = _analytic_pattern_violations(model)
    if pattern:
        raise WrongSolverHint(
            f"model {model.name!r} is outside the closed-form family: {'; '.join(pattern)}"
        )
    require_rotation(target.rotation)

    rows = model.dh_rows
    d1, a1 = rows[0].d, rows[0].a
    a2 = rows[1].a
    d4 = rows[3].d
    d6 = rows[5].d
    offsets = np.array([r.theta_offset for r in rows])

    flange = target @ model.tool_offset.inverse()
    r_f = flange.rotation
    wrist = flange.position - d6 * r_f[:, 2]

    rho = math.hypot(wrist[0], wrist[1])
    if rho < 1e-9:
        raise SingularTarget(
            "wrist center lies on the base yaw axis; the first joint is undetermined"
        )
    heading = math.atan2(wrist[1], wrist[0])
    s = wrist[2] - d1

    solutions: list[IkSolution] = []
    rejected: list[tuple[BranchLabel, str]] = []

    for shoulder, th1 in (("right", heading), ("left", normalize_angle(heading + math.pi))):
        # Radial coordinate in the arm plane is signed: negative for the
        # flipped-shoulder branch, so the same planar algebra covers both.
        pr = math.cos(th1) * wrist[0] + math.sin(th1) * wrist[1] - a1
        c_el = (pr * pr + s * s - a2 * a2 - d4 * d4) / (2.0 * a2 * d4)
        if abs(c_el) > 1.0 + REACH_SLACK / (a2 * d4):
            rejected.append(
                (
                    BranchLabel(shoulder=shoulder),
                    f"wrist center out of reach for this shoulder branch (cos = {c_el:.6f})",
                )
            )
            continue
        c_el = min(1.0, max(-1.0, c_el))
        s_el_mag = math.sqrt(max(0.0, 1.0 - c_el * c_el))

        for elbow, s_el in (("up", -s_el_mag), ("down", s_el_mag)):
            th2 = math.atan2(s, pr) - math.atan2(d4 * s_el, a2 + d4 * c_el)
            # Forearm runs along the z axis of frame 3, a quarter turn from
            # the planar elbow angle.
            th3 = math.atan2(s_el, c_el) + math.pi / 2.0

            r03 = (
                _rotation_block(rows[0], th1)
                @ _rotation_block(rows[1], th2)
                @ _rotation_block(rows[2], th3)
            )
            m = r03.T @ r_f

            sin5 = math.hypot(m[0, 2], m[1, 2])
            if sin5 < 1e-9:
                # Wrist singularity: q4 and q6 only matter in combination;
                # fix q4 = 0 and both wrist branches coincide.
                if m[2, 2] > 0.0:
                    wrist_angles = [("noflip", (0.0, 0.0, math.atan2(m[1, 0], m[0, 0])))]
                else:
                    wrist_angles = [("noflip", (0.0, math.pi, math.atan2(m[1, 0], m[1, 1])))]
            else:
                th5 = math.atan2(sin5, m[2, 2])
                th4 = math.atan2(m[1, 2], m[0, 2])
                th6 = math.atan2(m[2, 1], -m[2, 0])
                wrist_angles = [
                    ("noflip", (th4, th5, th6)),
                    ("flip", (th4 + math.pi, -th5, th6 + math.pi)),
                ]

            for wrist_branch, (th4, th5, th6) in wrist_angles:
                label = BranchLabel(shoulder=shoulder, elbow=elbow, wrist=wrist_branch)
                thetas = np.array([th1, th2, th3, th4, th5, th6])
                q = np.array([normalize_angle(t - o) for t, o in zip(thetas, offsets)])

                violation = _limit_violation(model, q)
                if violation is not None:
                    rejected.append((label, violation))
                    continue

                fk = forward_kinematics(model, q)
                pos_err = float(np.linalg.norm(fk.position - target.position))
                rot_err = rotation_distance(fk.rotation, target.rotation)
                if pos_err > ANALYTIC_FK_TOL or rot_err > ANALYTIC_FK_TOL:
                    rejected.append(
                        (label, f"forward-kinematics check failed (pos {pos_err:.3e} m)")
                    )
                    continue

                if any(
                    np.max(np.abs([normalize_angle(d) for d in q - sol.q])) < BRANCH_MERGE_TOL
                    for sol in solutions
                ):
                    continue  # boundary branch coincides with an earlier one
                solutions.append(IkSolution(q, label))

    if not solutions:
        reasons = "; ".join(f"{label}: {why}" for label, why in rejected) or "no branch produced"
        raise OutOfWorkspace(f"no closed-form branch reaches the target ({reasons})")
    return IkSolutionSet(tuple(solutions), rejected=tuple(rejected))


@dataclass(frozen=True)
class DlsOptions:
    """Damped-least-squares settings. Defaults favor stability near
    singularities over raw speed."""

    damping: float = 0.05
    max_iters: int = 200
    tol_pos: float = 1e-6
    tol_rot: float = 1e-6
    fd_step: float = 1e-6

    def __post_init__(self):
        for name in ("damping", "max_iters", "tol_pos", "tol_rot", "fd_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"DLS option {name} must be positive")


def _fk_matrix(model: RobotModel, q: np.ndarray) -> np.ndarray:
    t = np.eye(4)
    for (row, _), angle in zip(model.joints, q):
        t = t @ dh_matrix(row.a, row.alpha, row.d, angle + row.theta_offset)
    return t @ model.tool_offset.as_matrix()


def _rotation_log(r: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a rotation matrix."""
    cos_angle = min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0))
    angle = math.acos(cos_angle)
    if angle < 1e-12:
        return np.zeros(3)
    if math.pi - angle < 1e-6:
        # Near a half-turn the skew part vanishes; recover the axis from the
        # symmetric part instead.
        axis = np.sqrt(np.clip((np.diag(r) + 1.0) / 2.0, 0.0, None))
        k = int(np.argmax(axis))
        if axis[k] > 0:
            for j in range(3):
                if j != k and r[k, j] + r[j, k] < 0:
                    axis[j] = -axis[j]
        return axis / np.linalg.norm(axis) * angle
    v = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return v / (2.0 * math.sin(angle)) * angle


def _as_ik_target(target) -> tuple[np.ndarray, np.ndarray | None]:
    """Split an IK target into (position, rotation-or-None)."""
    if isinstance(target, Pose):
        target = pose_to_transform(target)
    if isinstance(target, Transform):
        require_rotation(target.rotation)
        return target.position.copy(), target.rotation.copy()
    pos = np.asarray(target, dtype=float).reshape(-1)
    if pos.shape[0] != 3:
        raise DimensionMismatch(f"position target must have 3 components, got {pos.shape[0]}")
    return pos, None


def ik_numeric_dls(
    model: RobotModel,
    target,
    seed,
    opts: DlsOptions | None = None,
) -> IkSolutionSet:
    """Damped-least-squares IK from a seed configuration.

    target may be a Pose or Transform (full pose) or a 3-vector (position
    only). The Jacobian of the task error is taken by central finite
    differences, each step is backtracked until the residual does not
    increase, and every iterate is clamped to the joint limits, so the
    reported residual history is monotone non-increasing. Returns a
    single-solution set or raises NoConvergence carrying the best iterate.
    """
    opts = opts or DlsOptions()
    target_pos, target_rot = _as_ik_target(target)
    q = np.asarray(seed, dtype=float).reshape(-1)
    if q.shape[0] != model.joint_count:
        raise DimensionMismatch(
            f"seed has {q.shape[0]} values for a {model.joint_count}-joint model"
        )
    lo, hi = model.limits_arrays()
    q = np.clip(q, lo, hi)

    def task_error(qv: np.ndarray):
        fk = _fk_matrix(model, qv)
        e_pos = target_pos - fk[:3, 3]
        if target_rot is None:
            return e_pos, float(np.linalg.norm(e_pos)), 0.0
        e_rot = _rotation_log(target_rot @ fk[:3, :3].T)
        err = np.concatenate([e_pos, e_rot])
        return (
            err,
            float(np.linalg.norm(e_pos)),
            rotation_distance(target_rot, fk[:3, :3]),
        )

    def converged(pos_err: float, rot_err: float) -> bool:
        return pos_err < opts.tol_pos and (target_rot is None or rot_err < opts.tol_rot)

    err, pos_err, rot_err = task_error(q)
    residual = float(np.linalg.norm(err))
    history = [residual]
    if converged(pos_err, rot_err):
        return IkSolutionSet((IkSolution(q, NUMERIC_BRANCH),), selected=0)

    h = opts.fd_step
    lam2 = opts.damping * opts.damping
    m = err.shape[0]
    for _ in range(opts.max_iters):
        jac = np.empty((m, q.shape[0]))
        for j in range(q.shape[0]):
            bump = np.zeros_like(q)
            bump[j] = h
            jac[:, j] = (task_error(q + bump)[0] - task_error(q - bump)[0]) / (2.0 * h)

        step = -jac.T @ np.linalg.solve(jac @ jac.T + lam2 * np.eye(m), err)
        accepted = False
        for _ in range(16):
            q_try = np.clip(q + step, lo, hi)
            err_try, pos_try, rot_try = task_error(q_try)
            res_try = float(np.linalg.norm(err_try))
            if res_try < residual:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        q, err, residual = q_try, err_try, res_try
        pos_err, rot_err = pos_try, rot_try
        history.append(residual)
        if converged(pos_err, rot_err):
            return IkSolutionSet((IkSolution(q, NUMERIC_BRANCH),), selected=0)

    raise NoConvergence(
        f"no convergence after {len(history) - 1} accepted steps", q, residual, history
    )


def dls_refine(model: RobotModel, target_pos, seed, iters: int = 5) -> np.ndarray:
    """Best-effort position-only DLS refinement; never raises on
    non-convergence. Used by the tracking stepper."""
    try:
        result = ik_numeric_dls(
            model,
            np.asarray(target_pos, dtype=float),
            seed,
            DlsOptions(max_iters=iters),
        )
        return result.solutions[0].q
    except NoConvergence as exc:
        return np.asarray(exc.best, dtype=float)


def select_solution(solution_set: IkSolutionSet, current) -> np.ndarray:
    """Pick the branch closest to the current configuration.

    Distance is the plain sum of per-joint absolute differences (bounded
    joints cannot wrap, so no mod-2pi credit); ties go to the lowest branch
    ordinal. Marks the chosen index on the set and returns its joint vector.
    """
    if not solution_set.solutions:
        raise EmptySet("cannot select from an empty solution set")
    current = np.asarray(current, dtype=float).reshape(-1)
    if current.shape[0] != solution_set.solutions[0].q.shape[0]:
        raise DimensionMismatch(
            f"current has {current.shape[0]} values, solutions have "
            f"{solution_set.solutions[0].q.shape[0]}"
        )
    best_idx = min(
        range(len(solution_set.solutions)),
        key=lambda i: (
            float(np.sum(np.abs(solution_set.solutions[i].q - current))),
            solution_set.solutions[i].branch.ordinal(),
        ),
    )
    solution_set.selected = best_idx
    return solution_set.solutions[best_idx].q


def solve_ik(
    model: RobotModel,
    target,
    seed=None,
    opts: DlsOptions | None = None,
) -> IkSolutionSet:
    """Dispatch to the solver named by the model's hint.

    planar2r: target is any (x, y, ...) position; branches are mapped
    through theta offsets and filtered by the model's joint limits.
    analytic6dof: target must carry orientation (Pose or Transform).
    numeric: full-pose tracking for chains of 6+ joints, position-only
    otherwise; seeded from `seed` or the home configuration.
    """
    hint = model.solver_hint
    if hint == "planar2r":
        if isinstance(target, Pose):
            pos = target.position[:2]
        elif isinstance(target, Transform):
            pos = target.position[:2]
        else:
            pos = np.asarray(target, dtype=float).reshape(-1)[:2]
        raw = ik_planar_2r(model.dh_rows[0].a, model.dh_rows[1].a, pos)
        solutions = []
        rejected = list(raw.rejected)
        offsets = np.array([r.theta_offset for r in model.dh_rows])
        for sol in raw.solutions:
            q = np.array([normalize_angle(t - o) for t, o in zip(sol.q, offsets)])
            violation = _limit_violation(model, q)
            if violation is None:
                solutions.append(IkSolution(q, sol.branch))
            else:
                rejected.append((sol.branch, violation))
        if not solutions:
            raise OutOfWorkspace("all planar branches violate the joint limits")
        return IkSolutionSet(tuple(solutions), rejected=tuple(rejected))

    if hint == "analytic6dof":
        if isinstance(target, Pose):
            target = pose_to_transform(target)
        if not isinstance(target, Transform):
            raise ValueError("the closed-form 6-DOF solver needs a full pose target")
        return ik_analytic_6dof(model, target)

    if hint == "numeric":
        if seed is None:
            seed = model.home()
        if isinstance(target, (Pose, Transform)) and model.joint_count < 6:
            pos = target.position if isinstance(target, Transform) else np.asarray(
                target.position, dtype=float
            )
            target = pos  # under-actuated chains track position only
        return ik_numeric_dls(model, target, seed, opts)

    raise WrongSolverHint(f"unknown solver hint {hint!r}")
