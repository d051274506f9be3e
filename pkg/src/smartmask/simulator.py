"""Deterministic discrete-time device simulator.

Owns the virtual clock and a slew-rate-limited servo model, drives the
firmware with scripted sensor scenarios, and records every tick into a
replayable transcript. Two runs with equal inputs produce byte-identical
transcripts after serialization.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

from .firmware import (
    Alert,
    DeviceConfig,
    IrGesture,
    MaskState,
    OutOfRangeError,
    PirMotion,
    SensorEvent,
    ServoCommand,
    ServoPosition,
    Temperature,
    handle_event,
    initial_state,
)

DEFAULT_TICK_MS = 10


# --- servo model -------------------------------------------------------------


@dataclass(frozen=True)
class ServoModel:
    """SG-90-style hobby servo: rate-limited motion toward a target angle,
    position commanded through a linear pulse-width mapping."""

    current_angle_deg: float = 0.0
    target_angle_deg: float = 0.0
    slew_rate_deg_per_s: float = 600.0
    min_pulse_us: float = 500.0
    max_pulse_us: float = 2500.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.current_angle_deg <= 180.0:
            raise ValueError("current_angle_deg must be in [0, 180]")
        if not 0.0 <= self.target_angle_deg <= 180.0:
            raise ValueError("target_angle_deg must be in [0, 180]")
        if self.slew_rate_deg_per_s <= 0:
            raise ValueError("slew_rate_deg_per_s must be > 0")
        if self.min_pulse_us >= self.max_pulse_us:
            raise ValueError("min_pulse_us must be < max_pulse_us")


def servo_step(servo: ServoModel, dt_ms: float) -> ServoModel:
    """Advance the servo by one time slice, never overshooting the target."""
    if dt_ms <= 0:
        raise ValueError("dt_ms must be > 0")
    delta = servo.target_angle_deg - servo.current_angle_deg
    if delta == 0.0:
        return servo
    step = servo.slew_rate_deg_per_s * dt_ms / 1000.0
    if abs(delta) <= step:
        return replace(servo, current_angle_deg=servo.target_angle_deg)
    return replace(
        servo, current_angle_deg=servo.current_angle_deg + math.copysign(step, delta)
    )


def pulse_width_us(servo: ServoModel, angle: float) -> float:
    """PWM pulse width commanding the given angle."""
    if not 0.0 <= angle <= 180.0:
        raise OutOfRangeError(f"angle must be in [0, 180], got {angle!r}")
    span = servo.max_pulse_us - servo.min_pulse_us
    return servo.min_pulse_us + (angle / 180.0) * span


# --- scenarios ---------------------------------------------------------------


class ScenarioError(ValueError):
    """Scenario document rejected."""


class MalformedScenario(ScenarioError):
    """Not valid JSON, or not shaped like a scenario."""


class OutOfOrderScenario(ScenarioError):
    def __init__(self, index: int):
        super().__init__(f"OutOfOrder at index {index}")
        self.index = index


class BadScenarioValue(ScenarioError):
    """A field has the right shape but an impossible value."""


@dataclass(frozen=True)
class Scenario:
    """Scripted sensor input: events sorted by timestamp, non-decreasing."""

    events: tuple[SensorEvent, ...] = ()

    @property
    def last_event_ms(self) -> int:
        return self.events[-1].at_ms if self.events else 0


def _require_number(obj: dict, key: str, index: int) -> float:
    if key not in obj:
        raise MalformedScenario(f"event {index} missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedScenario(f"event {index} field {key!r} must be a number")
    if not math.isfinite(value):
        raise BadScenarioValue(f"event {index} field {key!r} must be finite")
    return value


def parse_scenario(text: str) -> Scenario:
    """Parse the scenario JSON document.

    Raises MalformedScenario for structural problems, OutOfOrderScenario
    when timestamps decrease, BadScenarioValue for impossible values.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedScenario(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "events" not in doc:
        raise MalformedScenario("top level must be an object with an 'events' list")
    raw_events = doc["events"]
    if not isinstance(raw_events, list):
        raise MalformedScenario("'events' must be a list")

    events: list[SensorEvent] = []
    prev_ms: Optional[int] = None
    for i, raw in enumerate(raw_events):
        if not isinstance(raw, dict):
            raise MalformedScenario(f"event {i} must be an object")
        at_ms = _require_number(raw, "at_ms", i)
        if isinstance(at_ms, float) and not at_ms.is_integer():
            raise MalformedScenario(f"event {i} 'at_ms' must be an integer")
        at_ms = int(at_ms)
        if at_ms < 0:
            raise BadScenarioValue(f"event {i} 'at_ms' must be >= 0")
        if prev_ms is not None and at_ms < prev_ms:
            raise OutOfOrderScenario(i)
        prev_ms = at_ms

        kind = raw.get("kind")
        if kind == "ir_gesture":
            events.append(IrGesture(at_ms=at_ms))
        elif kind == "pir_motion":
            distance = _require_number(raw, "distance_m", i)
            if distance < 0:
                raise BadScenarioValue(f"event {i} 'distance_m' must be >= 0")
            events.append(PirMotion(at_ms=at_ms, distance_m=distance))
        elif kind == "temperature":
            celsius = _require_number(raw, "celsius", i)
            events.append(Temperature(at_ms=at_ms, celsius=celsius))
        elif kind is None:
            raise MalformedScenario(f"event {i} missing field 'kind'")
        else:
            raise MalformedScenario(f"event {i} has unknown kind {kind!r}")

    return Scenario(events=tuple(events))


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# --- transcripts -------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptRecord:
    t_ms: int
    state: MaskState
    command: Optional[ServoCommand]
    alerts: tuple[Alert, ...]
    servo_angle_deg: float

    def to_dict(self) -> dict:
        return {
            "t_ms": self.t_ms,
            "angle_deg": self.servo_angle_deg,
            "target_deg": self.state.target_angle_deg,
            "position": self.state.position.value,
            "command": self.command.target_angle_deg if self.command else None,
            "alerts": [
                {"kind": a.kind.value, "at_ms": a.at_ms, "message": a.message}
                for a in self.alerts
            ],
        }


@dataclass(frozen=True)
class Transcript:
    records: tuple[TranscriptRecord, ...]
    tick_ms: int

    def to_jsonl(self) -> str:
        """One record per line, keys sorted, so equal runs serialize to
        byte-identical documents."""
        lines = [
            json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)
            for r in self.records
        ]
        return "\n".join(lines) + "\n" if lines else ""


# --- the run loop ------------------------------------------------------------


def run_scenario(
    scenario: Scenario,
    config: Optional[DeviceConfig] = None,
    tick_ms: int = DEFAULT_TICK_MS,
    servo: Optional[ServoModel] = None,
) -> Transcript:
    """Replay a scenario against a fresh device, tick by tick.

    Each tick: inject every scheduled event whose timestamp has arrived
    (in order), forward any resulting servo command, step the servo, feed
    position feedback to the firmware, then record a snapshot. The run
    extends past the final event until the servo settles, so transcripts
    always end quiescent.
    """
    if tick_ms <= 0:
        raise ValueError("tick_ms must be > 0")
    config = config or DeviceConfig()
    state = initial_state(config)
    if servo is None:
        servo = ServoModel(
            current_angle_deg=config.angle_covering,
            target_angle_deg=config.angle_covering,
        )

    pending = deque(scenario.events)
    records: list[TranscriptRecord] = []
    t = 0
    while True:
        command: Optional[ServoCommand] = None
        alerts: list[Alert] = []
        # Events land at the first tick boundary at or after their timestamp.
        while pending and pending[0].at_ms <= t:
            out = handle_event(state, config, pending.popleft())
            state = out.new_state
            if out.command is not None:
                command = out.command
            alerts.extend(out.alerts)
        if command is not None:
            servo = replace(servo, target_angle_deg=command.target_angle_deg)
        servo = servo_step(servo, tick_ms)
        state = handle_event(
            state, config, ServoPosition(at_ms=t, angle_deg=servo.current_angle_deg)
        ).new_state
        records.append(
            TranscriptRecord(
                t_ms=t,
                state=state,
                command=command,
                alerts=tuple(alerts),
                servo_angle_deg=servo.current_angle_deg,
            )
        )
        if not pending and servo.current_angle_deg == servo.target_angle_deg:
            break
        t += tick_ms

    return Transcript(records=tuple(records), tick_ms=tick_ms)
