"""Pure, deterministic mask firmware logic.

No I/O and no clock of its own: time arrives inside events, state goes in
and comes out. The simulator and the network control plane drive this
module; it never drives them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Union

ANGLE_MIN_DEG = 0.0
ANGLE_MAX_DEG = 180.0

# Sensor totalization bounds: readings outside these are clamped, never
# rejected — the firmware loop must not halt on sensor noise.
TEMP_MIN_C = -40.0
TEMP_MAX_C = 125.0

PROXIMITY_ALERT_MESSAGE = "keep safe distance"


class OutOfRangeError(ValueError):
    """A commanded angle falls outside [0, 180] degrees."""


def _check_angle(angle: float, what: str) -> None:
    if not ANGLE_MIN_DEG <= angle <= ANGLE_MAX_DEG:
        raise OutOfRangeError(f"{what} must be in [0, 180], got {angle!r}")


@dataclass(frozen=True)
class DeviceConfig:
    """Tunable behavior of one mask device.

    angle_covering / angle_open are the two servo endpoints the gesture
    toggle alternates between; they must differ but either may be 0 or 180.
    """

    angle_covering: float = 0.0
    angle_open: float = 180.0
    proximity_threshold_m: float = 1.0
    fever_threshold_c: float = 38.0
    gesture_refractory_ms: int = 500
    alert_cooldown_ms: int = 5000

    def __post_init__(self) -> None:
        _check_angle(self.angle_covering, "angle_covering")
        _check_angle(self.angle_open, "angle_open")
        if self.angle_covering == self.angle_open:
            raise ValueError("angle_covering and angle_open must differ")
        if self.proximity_threshold_m <= 0:
            raise ValueError("proximity_threshold_m must be > 0")
        if self.gesture_refractory_ms < 0:
            raise ValueError("gesture_refractory_ms must be >= 0")
        if self.alert_cooldown_ms < 0:
            raise ValueError("alert_cooldown_ms must be >= 0")


class Position(enum.Enum):
    """Where the mask is, as far as the firmware can tell."""

    COVERING = "covering"
    OPEN = "open"
    PARTIAL = "partial"
    MOVING = "moving"


@dataclass(frozen=True)
class MaskState:
    current_angle_deg: float
    target_angle_deg: float
    position: Position
    last_gesture_ms: Optional[int] = None
    last_proximity_alert_ms: Optional[int] = None
    last_fever_alert_ms: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "current_angle_deg": self.current_angle_deg,
            "target_angle_deg": self.target_angle_deg,
            "position": self.position.value,
            "last_gesture_ms": self.last_gesture_ms,
            "last_proximity_alert_ms": self.last_proximity_alert_ms,
            "last_fever_alert_ms": self.last_fever_alert_ms,
        }


def classify_position(current: float, target: float, config: DeviceConfig) -> Position:
    """Position per the settled/moving rule: Moving while current != target,
    otherwise named by which configured endpoint (if any) the mask sits at."""
    if current != target:
        return Position.MOVING
    if current == config.angle_covering:
        return Position.COVERING
    if current == config.angle_open:
        return Position.OPEN
    return Position.PARTIAL


def initial_state(config: DeviceConfig) -> MaskState:
    """Device boots settled at the covering angle."""
    angle = config.angle_covering
    return MaskState(
        current_angle_deg=angle,
        target_angle_deg=angle,
        position=classify_position(angle, angle, config),
    )


# --- sensor events -----------------------------------------------------------


@dataclass(frozen=True)
class IrGesture:
    at_ms: int


@dataclass(frozen=True)
class PirMotion:
    at_ms: int
    distance_m: float


@dataclass(frozen=True)
class Temperature:
    at_ms: int
    celsius: float


@dataclass(frozen=True)
class ServoPosition:
    at_ms: int
    angle_deg: float


SensorEvent = Union[IrGesture, PirMotion, Temperature, ServoPosition]


# --- outputs -----------------------------------------------------------------


class AlertKind(enum.Enum):
    PROXIMITY = "proximity"
    FEVER = "fever"


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    at_ms: int
    message: str


@dataclass(frozen=True)
class ServoCommand:
    target_angle_deg: float


@dataclass(frozen=True)
class StepOutput:
    new_state: MaskState
    command: Optional[ServoCommand] = None
    alerts: tuple[Alert, ...] = ()


# --- operations --------------------------------------------------------------


def toggle_target(state: MaskState, config: DeviceConfig) -> float:
    """Next toggle destination.

    Decides on the *target* angle, not the instantaneous position, so a
    gesture mid-motion reverses direction. Anything that is not exactly the
    open endpoint (covering, or a partial slider angle) toggles to open.
    """
    if state.target_angle_deg == config.angle_open:
        return config.angle_covering
    return config.angle_open


def apply_set_angle(state: MaskState, config: DeviceConfig, angle: float) -> StepOutput:
    """Point the mask at an absolute angle (remote slider command).

    Raises OutOfRangeError for angles outside [0, 180]; the state is left
    untouched so a rejected remote command has no effect. A command is
    emitted only when the target actually changes.
    """
    _check_angle(angle, "target angle")
    if angle == state.target_angle_deg:
        return StepOutput(new_state=state)
    new_state = replace(
        state,
        target_angle_deg=angle,
        position=classify_position(state.current_angle_deg, angle, config),
    )
    return StepOutput(new_state=new_state, command=ServoCommand(angle))


def evaluate_proximity(
    state: MaskState, config: DeviceConfig, distance_m: float, now: int
) -> Optional[Alert]:
    """Social-distancing check: alert when someone is at or inside the
    threshold, rate-limited by the alert cooldown.

    Negative distances (sensor noise) clamp to 0 and therefore alert.
    """
    distance_m = max(distance_m, 0.0)
    if distance_m > config.proximity_threshold_m:
        return None
    last = state.last_proximity_alert_ms
    if last is not None and now - last < config.alert_cooldown_ms:
        return None
    return Alert(kind=AlertKind.PROXIMITY, at_ms=now, message=PROXIMITY_ALERT_MESSAGE)


def evaluate_temperature(
    state: MaskState, config: DeviceConfig, celsius: float, now: int
) -> Optional[Alert]:
    """Fever check against the configured threshold (inclusive), with the
    same cooldown mechanism as proximity alerts."""
    celsius = min(max(celsius, TEMP_MIN_C), TEMP_MAX_C)
    if celsius < config.fever_threshold_c:
        return None
    last = state.last_fever_alert_ms
    if last is not None and now - last < config.alert_cooldown_ms:
        return None
    return Alert(
        kind=AlertKind.FEVER,
        at_ms=now,
        message=f"fever detected: {celsius:.1f} C",
    )


def observe_servo(state: MaskState, config: DeviceConfig, angle: float) -> MaskState:
    """Fold a servo position feedback reading into the state."""
    angle = min(max(angle, ANGLE_MIN_DEG), ANGLE_MAX_DEG)
    return replace(
        state,
        current_angle_deg=angle,
        position=classify_position(angle, state.target_angle_deg, config),
    )


def handle_event(state: MaskState, config: DeviceConfig, event: SensorEvent) -> StepOutput:
    """Single entry point the device loop feeds every sensor event through.

    Total over all inputs: out-of-range readings are clamped by the
    per-sensor handlers, never raised.
    """
    if isinstance(event, IrGesture):
        last = state.last_gesture_ms
        if last is not None and event.at_ms - last < config.gesture_refractory_ms:
            return StepOutput(new_state=state)  # bounce within refractory window
        target = toggle_target(state, config)
        new_state = replace(
            state,
            target_angle_deg=target,
            position=classify_position(state.current_angle_deg, target, config),
            last_gesture_ms=event.at_ms,
        )
        return StepOutput(new_state=new_state, command=ServoCommand(target))

    if isinstance(event, PirMotion):
        alert = evaluate_proximity(state, config, event.distance_m, event.at_ms)
        if alert is None:
            return StepOutput(new_state=state)
        new_state = replace(state, last_proximity_alert_ms=event.at_ms)
        return StepOutput(new_state=new_state, alerts=(alert,))

    if isinstance(event, Temperature):
        alert = evaluate_temperature(state, config, event.celsius, event.at_ms)
        if alert is None:
            return StepOutput(new_state=state)
        new_state = replace(state, last_fever_alert_ms=event.at_ms)
        return StepOutput(new_state=new_state, alerts=(alert,))

    if isinstance(event, ServoPosition):
        return StepOutput(new_state=observe_servo(state, config, event.angle_deg))

    raise TypeError(f"unknown sensor event: {event!r}")
