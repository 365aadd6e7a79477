"""WebSocket transport for the digital-twin controller.

One asyncio event loop hosts every session handler and the fixed-rate tick
task, so controller mutations are naturally serialized: no observer can see
a torn state. Broadcasts go through websockets' broadcast(), which never
awaits; a peer too slow to drain its socket is disconnected rather than
allowed to stall the loop.
"""
from __future__ import annotations

import asyncio
import json
import logging
import signal

from websockets.asyncio.server import broadcast, serve

from .model import RobotModel
from .twin import TOPIC_JOINT_STATES, SessionState, TwinController, TwinProtocol

log = logging.getLogger("armtwin.server")

DEFAULT_PORT = 9090
DEFAULT_RATE_HZ = 30.0


class TwinServer:
    """Owns the controller, the session table, and the broadcast clock."""

    def __init__(
        self,
        model: RobotModel,
        host: str = "0.0.0.0",
        port: int = DEFAULT_PORT,
        rate_hz: float = DEFAULT_RATE_HZ,
    ):
        self.controller = TwinController(model, rate_hz=rate_hz)
        self.protocol = TwinProtocol(self.controller)
        self.host = host
        self.port = port
        self.rate_hz = rate_hz
        self.sessions: dict = {}  # ServerConnection -> SessionState
        self._server = None
        self._stopping = None

    @property
    def bound_port(self) -> int:
        sock = next(iter(self._server.sockets))
        return sock.getsockname()[1]

    async def _handle_connection(self, websocket) -> None:
        loop = asyncio.get_running_loop()
        peer = websocket.remote_address
        session = SessionState(peer=f"{peer[0]}:{peer[1]}", connected_at=loop.time())
        self.sessions[websocket] = session
        log.info("session %s connected", session.peer)
        try:
            for frame in self.controller.hello_frames():
                await websocket.send(json.dumps(frame))
            async for raw in websocket:
                for reply in self.protocol.handle_client_message(session, raw):
                    await websocket.send(json.dumps(reply))
        except Exception as exc:
            log.info("session %s dropped: %s", session.peer, exc)
        finally:
            self.sessions.pop(websocket, None)
            log.info("session %s closed", session.peer)

    async def _tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        period = 1.0 / self.rate_hz
        next_tick = loop.time() + period
        while True:
            await asyncio.sleep(max(0.0, next_tick - loop.time()))
            now = loop.time()
            self.controller.tick(now)
            payload = json.dumps(
                {
                    "op": "publish",
                    "topic": TOPIC_JOINT_STATES,
                    "msg": self.controller.joint_state_msg(),
                }
            )
            receivers = [
                ws
                for ws, session in self.sessions.items()
                if TOPIC_JOINT_STATES in session.subscriptions
            ]
            if receivers:
                # Same serialized payload to every subscriber, byte for byte.
                broadcast(receivers, payload)
            next_tick += period
            if next_tick < now:  # fell behind; re-anchor instead of spiraling
                next_tick = now + period

    async def run(self, ready: asyncio.Event | None = None) -> None:
        """Serve until cancelled or stop() is called."""
        self._stopping = asyncio.Event()
        async with serve(self._handle_connection, self.host, self.port) as server:
            self._server = server
            log.info("listening on %s:%d", self.host, self.bound_port)
            print(f"armtwin twin-server listening on ws://{self.host}:{self.bound_port}", flush=True)
            ticker = asyncio.create_task(self._tick_loop())
            if ready is not None:
                ready.set()
            try:
                await self._stopping.wait()
            finally:
                ticker.cancel()
                for ws in list(self.sessions):
                    await ws.close(1001, "server shutting down")

    def stop(self) -> None:
        if self._stopping is not None:
            self._stopping.set()


def run_server(
    model: RobotModel,
    host: str = "0.0.0.0",
    port: int = DEFAULT_PORT,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> None:
    """Blocking entry point with SIGINT/SIGTERM-driven clean shutdown."""
    server = TwinServer(model, host=host, port=port, rate_hz=rate_hz)

    async def main():
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, server.stop)
            except NotImplementedError:
                pass
        await server.run()

    asyncio.run(main())
