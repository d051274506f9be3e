"""Network control plane for a live simulated device.

Concurrent clients speak the same JSON frames over TCP (one frame per
line) or WebSocket (one frame per text message). Every mutation funnels
through a single command queue consumed by one device task that owns the
firmware state, the servo model, and the session log; broadcasts fan out
from there, so all subscribers observe the same frame order. A misbehaving
client gets its own ErrorFrame and affects nothing else.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import replace
from typing import Optional

from websockets.asyncio.server import serve as ws_serve

from .eventlog import DIRECTION_IN, DIRECTION_OUT, EventLog, apply_inbound_frame
from .firmware import (
    TEMP_MAX_C,
    TEMP_MIN_C,
    DeviceConfig,
    OutOfRangeError,
    ServoPosition,
    Temperature,
    handle_event,
    initial_state,
)
from .protocol import (
    Ack,
    AlertFrame,
    ErrorFrame,
    Frame,
    FrameError,
    GetState,
    SensorEventFrame,
    SetAngle,
    StateFrame,
    Subscribe,
    Toggle,
    decode_frame,
    encode_frame,
    frame_name,
)
from .simulator import Scenario, ServoModel, servo_step

logger = logging.getLogger(__name__)

DEFAULT_TCP_PORT = 7700
DEFAULT_WS_PORT = 7701
HEARTBEAT_MS = 1000
# Slow subscribers are buffered this deep, then dropped.
OUTBOUND_QUEUE_LIMIT = 256

_INBOUND_TYPES = (SetAngle, Toggle, GetState, Subscribe, SensorEventFrame)


class _ClientSession:
    """One connected client: bounded outbound queue plus a writer task."""

    def __init__(self, name: str):
        self.name = name
        self.subscribed = False
        self.queue: asyncio.Queue[Optional[str]] = asyncio.Queue(maxsize=OUTBOUND_QUEUE_LIMIT)
        self.dropped = False

    def enqueue(self, line: str) -> bool:
        if self.dropped:
            return False
        try:
            self.queue.put_nowait(line)
            return True
        except asyncio.QueueFull:
            self.shutdown()
            return False

    def shutdown(self) -> None:
        """Mark the session dead and wake its writer with a None sentinel."""
        self.dropped = True
        try:
            self.queue.put_nowait(None)
        except asyncio.QueueFull:
            try:
                self.queue.get_nowait()
            except asyncio.QueueEmpty:
                pass
            try:
                self.queue.put_nowait(None)
            except asyncio.QueueFull:
                pass


class DeviceServer:
    """A live SmartMask twin ticking against the wall clock."""

    def __init__(
        self,
        config: Optional[DeviceConfig] = None,
        servo: Optional[ServoModel] = None,
        tick_ms: int = 10,
        heartbeat_ms: int = HEARTBEAT_MS,
        log_path: Optional[str] = None,
        scenario: Optional[Scenario] = None,
    ):
        self.config = config or DeviceConfig()
        self.state = initial_state(self.config)
        angle = self.config.angle_covering
        self.servo = servo or ServoModel(current_angle_deg=angle, target_angle_deg=angle)
        self.last_temp_c: Optional[float] = None
        self.log = EventLog(log_path)
        self._tick_ms = tick_ms
        self._heartbeat_ms = heartbeat_ms
        self._scenario = scenario
        self._commands: asyncio.Queue[tuple[Frame, Optional[_ClientSession]]] = asyncio.Queue()
        self._sessions: set[_ClientSession] = set()
        self._tasks: list[asyncio.Task] = []
        self._tcp_server: Optional[asyncio.AbstractServer] = None
        self._ws_server = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._t0 = 0.0
        self._last_tick_ms = 0
        self._last_state_frame: Optional[StateFrame] = None
        self._client_counter = 0

    # --- lifecycle -----------------------------------------------------------

    async def start(
        self,
        host: str = "127.0.0.1",
        tcp_port: int = DEFAULT_TCP_PORT,
        ws_host: Optional[str] = None,
        ws_port: Optional[int] = DEFAULT_WS_PORT,
    ) -> None:
        self._loop = asyncio.get_running_loop()
        self._t0 = self._loop.time()
        self._tcp_server = await asyncio.start_server(self._handle_tcp, host, tcp_port)
        if ws_port is not None:
            self._ws_server = await ws_serve(self._handle_ws, ws_host or host, ws_port)
        self._tasks.append(asyncio.create_task(self._device_loop()))
        if self._scenario is not None and self._scenario.events:
            self._tasks.append(asyncio.create_task(self._inject_scenario()))
        logger.info("device listening on tcp %s ws %s", self.tcp_address, self.ws_address)

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass
        self._tasks.clear()
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        for session in list(self._sessions):
            session.shutdown()
        self.log.close()

    async def run_forever(self) -> None:
        await asyncio.Event().wait()

    @property
    def tcp_address(self) -> tuple[str, int]:
        sock = self._tcp_server.sockets[0]
        return sock.getsockname()[:2]

    @property
    def ws_address(self) -> Optional[tuple[str, int]]:
        if self._ws_server is None:
            return None
        sock = self._ws_server.sockets[0]
        return sock.getsockname()[:2]

    def now_ms(self) -> int:
        return int((self._loop.time() - self._t0) * 1000)

    # --- device task ---------------------------------------------------------

    async def _device_loop(self) -> None:
        tick_s = self._tick_ms / 1000.0
        hb_s = self._heartbeat_ms / 1000.0
        next_tick = self._loop.time() + tick_s
        next_hb = self._loop.time() + hb_s
        while True:
            now = self._loop.time()
            if now >= next_tick:
                self._tick()
                while next_tick <= now:
                    next_tick += tick_s
            if now >= next_hb:
                self._broadcast_state(force=True)
                next_hb = now + hb_s
            timeout = max(0.0, min(next_tick, next_hb) - self._loop.time())
            try:
                frame, session = await asyncio.wait_for(self._commands.get(), timeout)
            except asyncio.TimeoutError:
                continue
            self._apply(frame, session)

    def _tick(self) -> None:
        now_ms = self.now_ms()
        dt_ms = now_ms - self._last_tick_ms
        if dt_ms <= 0:
            return
        self._last_tick_ms = now_ms
        if self.servo.current_angle_deg == self.servo.target_angle_deg:
            return
        self.servo = servo_step(self.servo, dt_ms)
        feedback = ServoPosition(at_ms=now_ms, angle_deg=self.servo.current_angle_deg)
        self.state = handle_event(self.state, self.config, feedback).new_state
        self.log.append(DIRECTION_IN, SensorEventFrame.from_event(feedback), now_ms)
        self._broadcast_state()

    def _apply(self, frame: Frame, session: Optional[_ClientSession]) -> None:
        now_ms = self.now_ms()

        if isinstance(frame, GetState):
            self.log.append(DIRECTION_IN, frame, now_ms)
            self._send(session, self._state_frame())
            return

        if isinstance(frame, Subscribe):
            self.log.append(DIRECTION_IN, frame, now_ms)
            if session is not None:
                session.subscribed = True
                self._send(session, self._state_frame())
            return

        if isinstance(frame, (Toggle, SetAngle)):
            try:
                out = apply_inbound_frame(self.state, self.config, frame, now_ms)
            except OutOfRangeError as exc:
                self._send(session, ErrorFrame(code="out_of_range", message=str(exc)))
                return
            self.state = out.new_state
            if out.command is not None:
                self.servo = replace(self.servo, target_angle_deg=out.command.target_angle_deg)
            self.log.append(DIRECTION_IN, frame, now_ms)
            self._send(session, Ack(of=frame_name(frame)))
            self._broadcast_state()
            return

        if isinstance(frame, SensorEventFrame):
            if frame.kind == "servo_position":
                self._send(
                    session,
                    ErrorFrame(code="bad_value", message="servo_position feedback is simulator-owned"),
                )
                return
            # The device owns its clock: readings are stamped on application.
            stamped = replace(frame, at_ms=now_ms)
            out = apply_inbound_frame(self.state, self.config, stamped, now_ms)
            self.state = out.new_state
            if stamped.kind == "temperature":
                self.last_temp_c = min(max(stamped.celsius, TEMP_MIN_C), TEMP_MAX_C)
            self.log.append(DIRECTION_IN, stamped, now_ms)
            self._send(session, Ack(of="sensor_event"))
            for alert in out.alerts:
                self._broadcast(AlertFrame(kind=alert.kind.value, message=alert.message, at_ms=alert.at_ms))
            self._broadcast_state()
            return

        self._send(session, ErrorFrame(code="bad_value", message=f"{frame_name(frame)} is not a command"))

    # --- outbound ------------------------------------------------------------

    def _state_frame(self) -> StateFrame:
        now_ms = self.now_ms()
        active = any(
            last is not None and now_ms - last < self.config.alert_cooldown_ms
            for last in (self.state.last_proximity_alert_ms, self.state.last_fever_alert_ms)
        )
        return StateFrame(
            angle_deg=self.state.current_angle_deg,
            target_deg=self.state.target_angle_deg,
            position=self.state.position.value,
            last_temp_c=self.last_temp_c,
            alert_active=active,
        )

    def _broadcast_state(self, force: bool = False) -> None:
        frame = self._state_frame()
        if force or frame != self._last_state_frame:
            self._last_state_frame = frame
            self._broadcast(frame)

    def _send(self, session: Optional[_ClientSession], frame: Frame) -> None:
        if session is None:
            return
        self.log.append(DIRECTION_OUT, frame, self.now_ms())
        if not session.enqueue(encode_frame(frame)):
            logger.warning("dropping slow client %s", session.name)

    def _broadcast(self, frame: Frame) -> None:
        subscribers = [s for s in self._sessions if s.subscribed and not s.dropped]
        if not subscribers:
            return
        self.log.append(DIRECTION_OUT, frame, self.now_ms())
        line = encode_frame(frame)
        for session in subscribers:
            if not session.enqueue(line):
                logger.warning("dropping slow subscriber %s", session.name)

    # --- client plumbing -----------------------------------------------------

    async def _submit_line(self, session: _ClientSession, line: str) -> None:
        line = line.strip()
        if not line:
            return
        try:
            frame = decode_frame(line)
        except FrameError as exc:
            # Isolation: the offender gets one ErrorFrame, nothing else changes.
            self._send(session, ErrorFrame(code=exc.code, message=str(exc)))
            return
        if not isinstance(frame, _INBOUND_TYPES):
            self._send(session, ErrorFrame(code="bad_value", message=f"{frame_name(frame)} is not a command"))
            return
        await self._commands.put((frame, session))

    def _new_session(self, transport: str) -> _ClientSession:
        self._client_counter += 1
        session = _ClientSession(f"{transport}-{self._client_counter}")
        self._sessions.add(session)
        return session

    def _close_session(self, session: _ClientSession) -> None:
        self._sessions.discard(session)
        session.shutdown()

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        session = self._new_session("tcp")

        async def write_outbound():
            # Closing the transport on exit unblocks the reader of a
            # dropped client.
            try:
                while True:
                    line = await session.queue.get()
                    if line is None:
                        break
                    writer.write(line.encode("utf-8") + b"\n")
                    await writer.drain()
            finally:
                writer.close()

        writer_task = asyncio.create_task(write_outbound())
        try:
            while not session.dropped:
                raw = await reader.readline()
                if not raw:
                    break
                await self._submit_line(session, raw.decode("utf-8", errors="replace"))
        except (ConnectionError, asyncio.IncompleteReadError, ValueError):
            pass  # ValueError: line longer than the stream limit
        finally:
            self._close_session(session)
            writer_task.cancel()
            try:
                await writer_task
            except (asyncio.CancelledError, ConnectionError, OSError):
                pass
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    async def _handle_ws(self, websocket) -> None:
        session = self._new_session("ws")

        async def write_outbound():
            try:
                while True:
                    line = await session.queue.get()
                    if line is None:
                        break
                    await websocket.send(line)
            finally:
                await websocket.close()

        writer_task = asyncio.create_task(write_outbound())
        try:
            async for message in websocket:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                await self._submit_line(session, message)
                if session.dropped:
                    break
        except Exception:
            pass
        finally:
            self._close_session(session)
            writer_task.cancel()
            try:
                await writer_task
            except (asyncio.CancelledError, Exception):
                pass

    # --- scenario injection ----------------------------------------------------

    async def _inject_scenario(self) -> None:
        """Feed scripted sensor events into the command queue on schedule."""
        for event in self._scenario.events:
            delay = event.at_ms / 1000.0 - (self._loop.time() - self._t0)
            if delay > 0:
                await asyncio.sleep(delay)
            await self._commands.put((SensorEventFrame.from_event(event), None))
