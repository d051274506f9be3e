"""Append-only session log and deterministic replay.

Every applied inbound frame and every emitted outbound frame becomes one
JSONL record. Replaying the inbound records through a fresh firmware state
reconstructs the exact final device state of the live session; the server
uses the same application function as replay, so the two cannot drift.

A log file describes a single session: seq starts at 1 and increases by
exactly 1 per record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

from .firmware import (
    DeviceConfig,
    MaskState,
    StepOutput,
    apply_set_angle,
    handle_event,
    initial_state,
    toggle_target,
)
from .protocol import (
    Frame,
    FrameError,
    GetState,
    SensorEventFrame,
    SetAngle,
    Subscribe,
    Toggle,
    frame_from_payload,
    frame_to_payload,
)

DIRECTION_IN = "in"
DIRECTION_OUT = "out"


class CorruptLogError(ValueError):
    """Replay hit a seq gap or an unparseable record; position says where."""

    def __init__(self, position: str, detail: str = ""):
        message = f"CorruptLog at {position}"
        if detail:
            message += f": {detail}"
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class LogRecord:
    seq: int
    t_ms: int
    direction: str  # "in" | "out"
    frame: Frame


def record_to_line(record: LogRecord) -> str:
    payload = {
        "seq": record.seq,
        "t_ms": record.t_ms,
        "dir": record.direction,
        "frame": frame_to_payload(record.frame),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def record_from_line(line: str, lineno: int) -> LogRecord:
    position = f"line {lineno}"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLogError(position, f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorruptLogError(position, "record must be an object")
    try:
        seq = obj["seq"]
        t_ms = obj["t_ms"]
        direction = obj["dir"]
        raw_frame = obj["frame"]
    except KeyError as exc:
        raise CorruptLogError(position, f"missing field {exc.args[0]!r}") from exc
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise CorruptLogError(position, "'seq' must be an integer")
    if not isinstance(t_ms, int) or isinstance(t_ms, bool):
        raise CorruptLogError(position, "'t_ms' must be an integer")
    if direction not in (DIRECTION_IN, DIRECTION_OUT):
        raise CorruptLogError(position, f"bad direction {direction!r}")
    try:
        frame = frame_from_payload(raw_frame)
    except FrameError as exc:
        raise CorruptLogError(position, str(exc)) from exc
    return LogRecord(seq=seq, t_ms=t_ms, direction=direction, frame=frame)


class EventLog:
    """In-memory record list with an optional JSONL file sink.

    Opening with a path truncates the file: one file holds one session.
    """

    def __init__(self, path: Optional[str] = None):
        self.records: list[LogRecord] = []
        self._next_seq = 1
        self._fh: Optional[IO[str]] = open(path, "w", encoding="utf-8") if path else None

    def append(self, direction: str, frame: Frame, t_ms: int) -> LogRecord:
        record = LogRecord(seq=self._next_seq, t_ms=t_ms, direction=direction, frame=frame)
        self._next_seq += 1
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(record_to_line(record) + "\n")
            self._fh.flush()
        return record

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_log(path: str) -> Iterator[LogRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            yield record_from_line(line, lineno)


def apply_inbound_frame(
    state: MaskState, config: DeviceConfig, frame: Frame, t_ms: int
) -> StepOutput:
    """Apply one inbound frame to the firmware state.

    This is the only place command frames touch firmware operations; the
    live server and replay both call it. Toggle maps to a set-angle of the
    toggle destination (a deliberate remote command, so no gesture
    debounce). GetState/Subscribe are reads and change nothing. May raise
    OutOfRangeError for a set_angle outside [0, 180].
    """
    if isinstance(frame, SetAngle):
        return apply_set_angle(state, config, frame.angle)
    if isinstance(frame, Toggle):
        return apply_set_angle(state, config, toggle_target(state, config))
    if isinstance(frame, SensorEventFrame):
        return handle_event(state, config, frame.to_event(t_ms))
    if isinstance(frame, (GetState, Subscribe)):
        return StepOutput(new_state=state)
    raise TypeError(f"not an inbound frame: {frame!r}")


def replay(records: Iterable[LogRecord], config: Optional[DeviceConfig] = None) -> MaskState:
    """Rebuild the final device state from a session log.

    Raises CorruptLogError on a seq gap (reported at the offending seq) or
    on an inbound record that could not have been applied live.
    """
    config = config or DeviceConfig()
    state = initial_state(config)
    expected_seq = 1
    for record in records:
        if record.seq != expected_seq:
            raise CorruptLogError(f"seq {record.seq}", f"expected seq {expected_seq}")
        expected_seq += 1
        if record.direction != DIRECTION_IN:
            continue
        try:
            state = apply_inbound_frame(state, config, record.frame, record.t_ms).new_state
        except ValueError as exc:
            # Only applied frames are logged inbound, so this cannot occur
            # in a log the server wrote.
            raise CorruptLogError(f"seq {record.seq}", str(exc)) from exc
    return state


def replay_file(path: str, config: Optional[DeviceConfig] = None) -> MaskState:
    return replay(read_log(path), config)
