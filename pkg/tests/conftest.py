import json
import re
import subprocess
import sys
import time

import numpy as np
import pytest

from armtwin import builtin_preset


@pytest.fixture(scope="session")
def planar2r():
    return builtin_preset("planar2r")


@pytest.fixture(scope="session")
def ur5():
    return builtin_preset("ur5")


@pytest.fixture(scope="session")
def tracker4dof():
    return builtin_preset("tracker4dof")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


class SpawnedServer:
    """armtwin serve subprocess on an ephemeral port."""

    def __init__(self, proc: subprocess.Popen, port: int):
        self.proc = proc
        self.port = port
        self.address = f"ws://127.0.0.1:{port}"

    def stop(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


def spawn_server(robot: str = "planar2r", rate: float = 30.0, extra=()) -> SpawnedServer:
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "armtwin.cli",
            "serve",
            "--robot",
            robot,
            "--port",
            "0",
            "--rate",
            str(rate),
            *extra,
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    deadline = time.monotonic() + 10.0
    banner = ""
    while time.monotonic() < deadline:
        line = proc.stdout.readline()
        if not line:
            break
        banner += line
        match = re.search(r"ws://[0-9.]+:(\d+)", line)
        if match:
            return SpawnedServer(proc, int(match.group(1)))
    proc.kill()
    raise RuntimeError(f"server did not start: {banner}")


@pytest.fixture()
def twin_server():
    server = spawn_server()
    yield server
    server.stop()


def recv_json(ws, timeout=5.0):
    return json.loads(ws.recv(timeout=timeout))


def drain_hello(ws):
    """Consume the connect-time advertise frames and robot description."""
    frames = []
    while True:
        frame = recv_json(ws)
        frames.append(frame)
        if frame.get("op") == "publish" and frame.get("topic") == "/robot_description":
            return frames
