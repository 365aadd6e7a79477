"""Operator command line: serve the twin, one-shot FK/IK, validate robot
files, and replay scripted command sequences.

Exit codes: 0 success, 1 no IK solution, 2 bad configuration or input,
3 bind failure, 4 replay connection loss, 5 replay error status.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .errors import ArmTwinError, NoConvergence, OutOfWorkspace, SingularTarget, Unreachable
from .geometry import transform_to_pose
from .ik import select_solution, solve_ik
from .kinematics import PoseCommand, forward_kinematics, pose_from_command
from .model import resolve_robot, validate_model
from .server import DEFAULT_PORT, DEFAULT_RATE_HZ, run_server

ENV_PORT = "ARMTWIN_PORT"
ENV_ROBOT = "ARMTWIN_ROBOT"

EXIT_OK = 0
EXIT_NO_SOLUTION = 1
EXIT_BAD_CONFIG = 2
EXIT_BIND_FAILURE = 3
EXIT_REPLAY_CONNECTION = 4
EXIT_REPLAY_STATUS = 5


def _parse_floats(text: str, expected: int | None = None) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    values = []
    for p in parts:
        try:
            values.append(float(p))
        except ValueError:
            raise ValueError(f"{p!r} is not a number")
    if expected is not None and len(values) != expected:
        raise ValueError(f"expected {expected} numbers, got {len(values)}")
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{v!r} is not finite")
    return values


def _load_robot(spec: str):
    try:
        return resolve_robot(spec)
    except (ArmTwinError, OSError) as exc:
        print(f"error: cannot load robot {spec!r}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_CONFIG)


def cmd_serve(args) -> int:
    model = _load_robot(args.robot)
    try:
        run_server(model, host=args.host, port=args.port, rate_hz=args.rate)
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_BIND_FAILURE
    return EXIT_OK


def _solution_set_doc(solutions) -> dict:
    return {
        "solutions": [
            {
                "branch": str(sol.branch),
                "radians": [float(v) for v in sol.q],
                "degrees": [float(np.degrees(v)) for v in sol.q],
                "selected": i == solutions.selected,
            }
            for i, sol in enumerate(solutions.solutions)
        ],
        "rejected": [
            {"branch": str(label), "reason": reason} for label, reason in solutions.rejected
        ],
    }


def _print_solutions(solutions) -> None:
    for i, sol in enumerate(solutions.solutions):
        mark = "*" if i == solutions.selected else " "
        rad = ", ".join(f"{v:+.6f}" for v in sol.q)
        deg = ", ".join(f"{np.degrees(v):+.2f}" for v in sol.q)
        print(f"{mark} {sol.branch}")
        print(f"    radians: [{rad}]")
        print(f"    degrees: [{deg}]")
    for label, reason in solutions.rejected:
        print(f"  dropped {label}: {reason}")


def cmd_solve(args) -> int:
    model = _load_robot(args.robot)
    try:
        if args.pose is not None:
            values = _parse_floats(args.pose, 6)
            target = pose_from_command(PoseCommand(*values))
        elif args.target is not None:
            target = np.array(_parse_floats(args.target))
            if target.shape[0] == 2:
                target = np.append(target, 0.0)
            elif target.shape[0] != 3:
                raise ValueError("--target takes 2 or 3 coordinates")
        else:
            print("error: provide --pose or --target", file=sys.stderr)
            return EXIT_BAD_CONFIG
        seed = model.home() if args.seed is None else np.array(
            _parse_floats(args.seed, model.joint_count)
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    try:
        solutions = solve_ik(model, target, seed=seed)
        select_solution(solutions, seed)
    except (Unreachable, OutOfWorkspace, SingularTarget, NoConvergence) as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, Unreachable):
            doc["deficit_m"] = exc.deficit
        if isinstance(exc, NoConvergence):
            doc["residual"] = exc.residual
        if args.json:
            print(json.dumps(doc))
        else:
            print(f"no solution: {doc['message']}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (ArmTwinError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    if args.json:
        print(json.dumps(_solution_set_doc(solutions)))
    else:
        print(f"{len(solutions.solutions)} solution(s) for {model.name}:")
        _print_solutions(solutions)
    return EXIT_OK


def cmd_fk(args) -> int:
    model = _load_robot(args.robot)
    try:
        q = _parse_floats(args.joints, model.joint_count)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    t = forward_kinematics(model, q)
    pose = transform_to_pose(t)
    if args.json:
        print(
            json.dumps(
                {
                    "position": [float(v) for v in t.position],
                    "rpy_radians": [float(v) for v in pose.orientation],
                    "rpy_degrees": [float(np.degrees(v)) for v in pose.orientation],
                    "rotation": [[float(v) for v in row] for row in t.rotation],
                }
            )
        )
        return EXIT_OK
    print(f"position (m):      [{', '.join(f'{v:+.6f}' for v in t.position)}]")
    print(f"rpy (radians):     [{', '.join(f'{v:+.6f}' for v in pose.orientation)}]")
    print(f"rpy (degrees):     [{', '.join(f'{np.degrees(v):+.2f}' for v in pose.orientation)}]")
    print("rotation matrix:")
    for row in t.rotation:
        print(f"    [{', '.join(f'{v:+.9f}' for v in row)}]")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        model = resolve_robot(args.robot)
    except (ArmTwinError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    violations = validate_model(model)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    print(f"ok: {model.name} ({model.joint_count} joints, solver {model.solver_hint})")
    return EXIT_OK


def cmd_replay(args) -> int:
    from websockets.exceptions import ConnectionClosed
    from websockets.sync.client import connect

    try:
        with open(args.script, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        entries = doc["entries"]
        if not isinstance(entries, list):
            raise ValueError("'entries' must be an array")
        for e in entries:
            if not isinstance(e, dict) or not {"delay_ms", "topic", "payload"} <= set(e):
                raise ValueError("each entry needs delay_ms, topic, payload")
            if not isinstance(e["delay_ms"], (int, float)) or e["delay_ms"] < 0:
                raise ValueError("delay_ms must be a non-negative number")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: bad replay script: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    try:
        ws = connect(args.address, open_timeout=5)
    except Exception as exc:
        print(f"error: cannot connect to {args.address}: {exc}", file=sys.stderr)
        return EXIT_REPLAY_CONNECTION

    any_error = False
    try:
        with ws:
            for i, entry in enumerate(entries):
                time.sleep(entry["delay_ms"] / 1000.0)
                msg_id = f"replay-{i}"
                ws.send(
                    json.dumps(
                        {
                            "op": "publish",
                            "topic": entry["topic"],
                            "msg": entry["payload"],
                            "id": msg_id,
                        }
                    )
                )
                deadline = time.monotonic() + 10.0
                while True:
                    reply = json.loads(ws.recv(timeout=max(0.0, deadline - time.monotonic())))
                    if reply.get("op") == "status" and reply.get("id") == msg_id:
                        break
                level = reply.get("level")
                print(f"[{i}] {entry['topic']} -> {level}: {reply.get('text')}")
                if level != "none":
                    any_error = True
    except (ConnectionClosed, TimeoutError, OSError) as exc:
        print(f"error: connection lost: {exc}", file=sys.stderr)
        return EXIT_REPLAY_CONNECTION
    return EXIT_REPLAY_STATUS if any_error else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armtwin",
        description="Serial-arm motion control and digital-twin server.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the twin-sync WebSocket server")
    p.add_argument(
        "--robot",
        default=os.environ.get(ENV_ROBOT, "planar2r"),
        help=f"preset name or robot file path (env {ENV_ROBOT})",
    )
    p.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get(ENV_PORT, DEFAULT_PORT)),
        help=f"TCP port, 0 for ephemeral (env {ENV_PORT})",
    )
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--rate", type=float, default=DEFAULT_RATE_HZ, help="broadcast rate in Hz")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("solve", help="solve IK for a target")
    p.add_argument("--robot", required=True)
    p.add_argument("--target", help="position 'x,y' or 'x,y,z' in meters")
    p.add_argument("--pose", help="six values 'x psi y theta z phi' (m and degrees)")
    p.add_argument("--seed", help="comma-separated joint seed in radians")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fk", help="forward kinematics for a joint vector")
    p.add_argument("--robot", required=True)
    p.add_argument("--joints", required=True, help="comma-separated joint angles in radians")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("validate", help="validate a robot description file")
    p.add_argument("robot", help="preset name or robot file path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="replay a scripted command sequence")
    p.add_argument("script", help="JSON replay script")
    p.add_argument("--address", default=f"ws://127.0.0.1:{DEFAULT_PORT}")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
