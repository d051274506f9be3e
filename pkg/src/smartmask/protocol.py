"""Wire protocol: one JSON object per line (TCP) or per message (WebSocket).

Every frame carries a "type" discriminator. Encoding is deterministic
(sorted keys, compact separators) so golden transcripts and logs are
byte-stable. Decoding ignores unknown extra fields for forward
compatibility; range enforcement for commanded angles is left to the
firmware, which is the single authority for it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

from .firmware import IrGesture, PirMotion, SensorEvent, ServoPosition, Temperature


class FrameError(ValueError):
    """A line that does not decode into a frame."""

    code = "frame_error"


class MalformedFrame(FrameError):
    code = "malformed"


class UnknownFrameType(FrameError):
    code = "unknown_type"


class BadFrameValue(FrameError):
    code = "bad_value"


# --- inbound frames ----------------------------------------------------------


@dataclass(frozen=True)
class SetAngle:
    angle: float


@dataclass(frozen=True)
class Toggle:
    pass


@dataclass(frozen=True)
class GetState:
    pass


@dataclass(frozen=True)
class Subscribe:
    pass


@dataclass(frozen=True)
class SensorEventFrame:
    """A sensor reading traveling as a frame.

    Used in the event log (so sessions replay exactly) and accepted from
    clients to inject simulated stimuli into the device. at_ms is optional
    on the wire; the device stamps its own clock when applying.
    """

    kind: str
    at_ms: Optional[int] = None
    distance_m: Optional[float] = None
    celsius: Optional[float] = None
    angle_deg: Optional[float] = None

    def __post_init__(self) -> None:
        required = {
            "ir_gesture": None,
            "pir_motion": "distance_m",
            "temperature": "celsius",
            "servo_position": "angle_deg",
        }
        if self.kind not in required:
            raise ValueError(f"unknown sensor kind {self.kind!r}")
        field = required[self.kind]
        if field is not None and getattr(self, field) is None:
            raise ValueError(f"sensor kind {self.kind!r} requires {field!r}")

    def to_event(self, at_ms: Optional[int] = None) -> SensorEvent:
        """Materialize the firmware event, stamping at_ms if the frame
        carries none."""
        stamp = self.at_ms if self.at_ms is not None else at_ms
        if stamp is None:
            raise ValueError("no timestamp available for sensor event")
        if self.kind == "ir_gesture":
            return IrGesture(at_ms=stamp)
        if self.kind == "pir_motion":
            return PirMotion(at_ms=stamp, distance_m=self.distance_m)
        if self.kind == "temperature":
            return Temperature(at_ms=stamp, celsius=self.celsius)
        return ServoPosition(at_ms=stamp, angle_deg=self.angle_deg)

    @classmethod
    def from_event(cls, event: SensorEvent) -> "SensorEventFrame":
        if isinstance(event, IrGesture):
            return cls(kind="ir_gesture", at_ms=event.at_ms)
        if isinstance(event, PirMotion):
            return cls(kind="pir_motion", at_ms=event.at_ms, distance_m=event.distance_m)
        if isinstance(event, Temperature):
            return cls(kind="temperature", at_ms=event.at_ms, celsius=event.celsius)
        if isinstance(event, ServoPosition):
            return cls(kind="servo_position", at_ms=event.at_ms, angle_deg=event.angle_deg)
        raise TypeError(f"unknown sensor event: {event!r}")


# --- outbound frames ---------------------------------------------------------


@dataclass(frozen=True)
class StateFrame:
    angle_deg: float
    target_deg: float
    position: str
    last_temp_c: Optional[float]
    alert_active: bool


@dataclass(frozen=True)
class AlertFrame:
    kind: str
    message: str
    at_ms: int


@dataclass(frozen=True)
class Ack:
    of: str


@dataclass(frozen=True)
class ErrorFrame:
    code: str
    message: str


Frame = Union[
    SetAngle,
    Toggle,
    GetState,
    Subscribe,
    SensorEventFrame,
    StateFrame,
    AlertFrame,
    Ack,
    ErrorFrame,
]

FRAME_TYPES: dict[type, str] = {
    SetAngle: "set_angle",
    Toggle: "toggle",
    GetState: "get_state",
    Subscribe: "subscribe",
    SensorEventFrame: "sensor_event",
    StateFrame: "state",
    AlertFrame: "alert",
    Ack: "ack",
    ErrorFrame: "error",
}


def frame_name(frame: Frame) -> str:
    return FRAME_TYPES[type(frame)]


# --- encoding ----------------------------------------------------------------


def frame_to_payload(frame: Frame) -> dict:
    if isinstance(frame, SetAngle):
        return {"type": "set_angle", "angle": frame.angle}
    if isinstance(frame, Toggle):
        return {"type": "toggle"}
    if isinstance(frame, GetState):
        return {"type": "get_state"}
    if isinstance(frame, Subscribe):
        return {"type": "subscribe"}
    if isinstance(frame, SensorEventFrame):
        payload: dict = {"type": "sensor_event", "kind": frame.kind}
        for key in ("at_ms", "distance_m", "celsius", "angle_deg"):
            value = getattr(frame, key)
            if value is not None:
                payload[key] = value
        return payload
    if isinstance(frame, StateFrame):
        return {
            "type": "state",
            "angle_deg": frame.angle_deg,
            "target_deg": frame.target_deg,
            "position": frame.position,
            "last_temp_c": frame.last_temp_c,
            "alert_active": frame.alert_active,
        }
    if isinstance(frame, AlertFrame):
        return {
            "type": "alert",
            "kind": frame.kind,
            "message": frame.message,
            "at_ms": frame.at_ms,
        }
    if isinstance(frame, Ack):
        return {"type": "ack", "of": frame.of}
    if isinstance(frame, ErrorFrame):
        return {"type": "error", "code": frame.code, "message": frame.message}
    raise TypeError(f"not a frame: {frame!r}")


def encode_frame(frame: Frame) -> str:
    """Single line of UTF-8 JSON, no interior newline, stable key order."""
    return json.dumps(
        frame_to_payload(frame), sort_keys=True, separators=(",", ":"), allow_nan=False
    )


# --- decoding ----------------------------------------------------------------


def _get_number(obj: dict, key: str, allow_none: bool = False) -> Optional[float]:
    if key not in obj:
        raise BadFrameValue(f"missing field {key!r}")
    value = obj[key]
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BadFrameValue(f"field {key!r} must be a number")
    if not math.isfinite(value):
        raise BadFrameValue(f"field {key!r} must be finite")
    return value


def _get_int(obj: dict, key: str) -> int:
    value = _get_number(obj, key)
    if isinstance(value, float) and not value.is_integer():
        raise BadFrameValue(f"field {key!r} must be an integer")
    return int(value)


def _get_str(obj: dict, key: str) -> str:
    if key not in obj:
        raise BadFrameValue(f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise BadFrameValue(f"field {key!r} must be a string")
    return value


def _get_bool(obj: dict, key: str) -> bool:
    if key not in obj:
        raise BadFrameValue(f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, bool):
        raise BadFrameValue(f"field {key!r} must be a boolean")
    return value


def _decode_sensor_event(obj: dict) -> SensorEventFrame:
    kind = _get_str(obj, "kind")
    at_ms = _get_int(obj, "at_ms") if obj.get("at_ms") is not None else None
    try:
        if kind == "ir_gesture":
            return SensorEventFrame(kind=kind, at_ms=at_ms)
        if kind == "pir_motion":
            distance = _get_number(obj, "distance_m")
            if distance < 0:
                raise BadFrameValue("field 'distance_m' must be >= 0")
            return SensorEventFrame(kind=kind, at_ms=at_ms, distance_m=distance)
        if kind == "temperature":
            return SensorEventFrame(kind=kind, at_ms=at_ms, celsius=_get_number(obj, "celsius"))
        if kind == "servo_position":
            return SensorEventFrame(kind=kind, at_ms=at_ms, angle_deg=_get_number(obj, "angle_deg"))
    except ValueError as exc:
        if isinstance(exc, FrameError):
            raise
        raise BadFrameValue(str(exc)) from exc
    raise BadFrameValue(f"unknown sensor kind {kind!r}")


_POSITIONS = {"covering", "open", "partial", "moving"}
_ALERT_KINDS = {"proximity", "fever"}


def frame_from_payload(obj: object) -> Frame:
    if not isinstance(obj, dict):
        raise MalformedFrame("frame must be a JSON object")
    if "type" not in obj:
        raise MalformedFrame("frame missing 'type'")
    ftype = obj["type"]
    if not isinstance(ftype, str):
        raise MalformedFrame("'type' must be a string")

    if ftype == "set_angle":
        # Out-of-[0,180] angles decode fine; apply_set_angle rejects them.
        return SetAngle(angle=_get_number(obj, "angle"))
    if ftype == "toggle":
        return Toggle()
    if ftype == "get_state":
        return GetState()
    if ftype == "subscribe":
        return Subscribe()
    if ftype == "sensor_event":
        return _decode_sensor_event(obj)
    if ftype == "state":
        position = _get_str(obj, "position")
        if position not in _POSITIONS:
            raise BadFrameValue(f"unknown position {position!r}")
        return StateFrame(
            angle_deg=_get_number(obj, "angle_deg"),
            target_deg=_get_number(obj, "target_deg"),
            position=position,
            last_temp_c=_get_number(obj, "last_temp_c", allow_none=True),
            alert_active=_get_bool(obj, "alert_active"),
        )
    if ftype == "alert":
        kind = _get_str(obj, "kind")
        if kind not in _ALERT_KINDS:
            raise BadFrameValue(f"unknown alert kind {kind!r}")
        message = _get_str(obj, "message")
        if not message:
            raise BadFrameValue("alert 'message' must be non-empty")
        return AlertFrame(kind=kind, message=message, at_ms=_get_int(obj, "at_ms"))
    if ftype == "ack":
        return Ack(of=_get_str(obj, "of"))
    if ftype == "error":
        return ErrorFrame(code=_get_str(obj, "code"), message=_get_str(obj, "message"))

    raise UnknownFrameType(f"unknown frame type {ftype!r}")


def _reject_constant(name: str):
    raise MalformedFrame(f"non-standard JSON constant {name!r}")


def decode_frame(line: str) -> Frame:
    """Inverse of encode_frame on valid input; tolerant of unknown extra
    fields. Raises MalformedFrame / UnknownFrameType / BadFrameValue."""
    try:
        obj = json.loads(line, parse_constant=_reject_constant)
    except MalformedFrame:
        raise
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise MalformedFrame(f"invalid JSON: {exc}") from exc
    return frame_from_payload(obj)
