"""SmartMask digital twin: firmware logic, device simulator, control plane."""

from .firmware import (
    Alert,
    AlertKind,
    DeviceConfig,
    IrGesture,
    MaskState,
    OutOfRangeError,
    PirMotion,
    Position,
    SensorEvent,
    ServoCommand,
    ServoPosition,
    StepOutput,
    Temperature,
    apply_set_angle,
    evaluate_proximity,
    evaluate_temperature,
    handle_event,
    initial_state,
    observe_servo,
    toggle_target,
)
from .simulator import (
    Scenario,
    ServoModel,
    Transcript,
    parse_scenario,
    pulse_width_us,
    run_scenario,
    servo_step,
)

__all__ = [
    "Alert",
    "AlertKind",
    "DeviceConfig",
    "IrGesture",
    "MaskState",
    "OutOfRangeError",
    "PirMotion",
    "Position",
    "Scenario",
    "SensorEvent",
    "ServoCommand",
    "ServoModel",
    "ServoPosition",
    "StepOutput",
    "Temperature",
    "Transcript",
    "apply_set_angle",
    "evaluate_proximity",
    "evaluate_temperature",
    "handle_event",
    "initial_state",
    "observe_servo",
    "parse_scenario",
    "pulse_width_us",
    "run_scenario",
    "servo_step",
    "toggle_target",
]

__version__ = "0.1.0"
