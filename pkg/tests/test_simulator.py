import json
import math
import random

import pytest

from smartmask.firmware import DeviceConfig, OutOfRangeError, Position
from smartmask.simulator import (
    BadScenarioValue,
    MalformedScenario,
    OutOfOrderScenario,
    Scenario,
    ServoModel,
    parse_scenario,
    pulse_width_us,
    run_scenario,
    servo_step,
)


class TestServoModel:
    def test_defaults_match_sg90_convention(self):
        servo = ServoModel()
        assert servo.slew_rate_deg_per_s == 600.0
        assert servo.min_pulse_us == 500.0
        assert servo.max_pulse_us == 2500.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"current_angle_deg": -1.0},
            {"target_angle_deg": 200.0},
            {"slew_rate_deg_per_s": 0.0},
            {"min_pulse_us": 2500.0, "max_pulse_us": 500.0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ServoModel(**kwargs)


class TestServoStep:
    def test_full_speed_sweep(self):
        servo = ServoModel(current_angle_deg=0.0, target_angle_deg=180.0)
        assert servo_step(servo, 100).current_angle_deg == 60.0

    def test_settled_stays_put(self):
        servo = ServoModel(current_angle_deg=180.0, target_angle_deg=180.0)
        assert servo_step(servo, 100).current_angle_deg == 180.0

    def test_never_overshoots(self):
        servo = ServoModel(current_angle_deg=170.0, target_angle_deg=180.0)
        assert servo_step(servo, 100).current_angle_deg == 180.0

    def test_moves_downward_too(self):
        servo = ServoModel(current_angle_deg=180.0, target_angle_deg=0.0)
        assert servo_step(servo, 100).current_angle_deg == 120.0

    def test_bad_dt_rejected(self):
        with pytest.raises(ValueError):
            servo_step(ServoModel(), 0)

    def test_converges_within_bound(self):
        # Stepwise integration: distance shrinks monotonically and the
        # target is hit exactly within ceil(180 / step_per_tick) ticks.
        rng = random.Random(3)
        for _ in range(100):
            servo = ServoModel(
                current_angle_deg=rng.uniform(0, 180),
                target_angle_deg=rng.uniform(0, 180),
                slew_rate_deg_per_s=rng.uniform(50, 1200),
            )
            tick_ms = rng.choice([5, 10, 20])
            bound = math.ceil(180.0 / (servo.slew_rate_deg_per_s * tick_ms / 1000.0))
            ticks = 0
            while servo.current_angle_deg != servo.target_angle_deg:
                gap = abs(servo.target_angle_deg - servo.current_angle_deg)
                servo = servo_step(servo, tick_ms)
                assert abs(servo.target_angle_deg - servo.current_angle_deg) <= gap
                ticks += 1
                assert ticks <= bound


class TestPulseWidth:
    def test_endpoints(self):
        servo = ServoModel()
        assert pulse_width_us(servo, 0) == 500.0
        assert pulse_width_us(servo, 180) == 2500.0

    def test_midpoint(self):
        assert pulse_width_us(ServoModel(), 90) == 1500.0

    def test_monotone_increasing(self):
        servo = ServoModel()
        widths = [pulse_width_us(servo, a) for a in range(0, 181)]
        assert all(b > a for a, b in zip(widths, widths[1:]))

    @pytest.mark.parametrize("angle", [-0.001, 180.001, 1000])
    def test_out_of_range(self, angle):
        with pytest.raises(OutOfRangeError):
            pulse_width_us(ServoModel(), angle)


class TestParseScenario:
    def test_minimal(self):
        scenario = parse_scenario('{"events":[{"at_ms":100,"kind":"ir_gesture"}]}')
        assert len(scenario.events) == 1
        assert scenario.events[0].at_ms == 100

    def test_empty(self):
        assert parse_scenario('{"events":[]}').events == ()

    def test_all_kinds(self):
        text = json.dumps(
            {
                "events": [
                    {"at_ms": 0, "kind": "ir_gesture"},
                    {"at_ms": 5, "kind": "pir_motion", "distance_m": 0.8},
                    {"at_ms": 5, "kind": "temperature", "celsius": 38.5},
                ]
            }
        )
        scenario = parse_scenario(text)
        assert [e.at_ms for e in scenario.events] == [0, 5, 5]

    def test_out_of_order(self):
        text = '{"events":[{"at_ms":200,"kind":"ir_gesture"},{"at_ms":100,"kind":"ir_gesture"}]}'
        with pytest.raises(OutOfOrderScenario) as excinfo:
            parse_scenario(text)
        assert "OutOfOrder at index 1" in str(excinfo.value)

    @pytest.mark.parametrize(
        "text",
        [
            "not json",
            "[]",
            "{}",
            '{"events":[{"kind":"ir_gesture"}]}',
            '{"events":[{"at_ms":0}]}',
            '{"events":[{"at_ms":0,"kind":"sneeze"}]}',
            '{"events":[{"at_ms":0,"kind":"pir_motion"}]}',
            '{"events":[{"at_ms":"zero","kind":"ir_gesture"}]}',
            '{"events":[{"at_ms":0.5,"kind":"ir_gesture"}]}',
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(MalformedScenario):
            parse_scenario(text)

    @pytest.mark.parametrize(
        "text",
        [
            '{"events":[{"at_ms":0,"kind":"pir_motion","distance_m":-1}]}',
            '{"events":[{"at_ms":-5,"kind":"ir_gesture"}]}',
        ],
    )
    def test_bad_values(self, text):
        with pytest.raises(BadScenarioValue):
            parse_scenario(text)

    def test_extra_fields_ignored(self):
        scenario = parse_scenario('{"events":[{"at_ms":1,"kind":"ir_gesture","note":"hi"}],"v":2}')
        assert len(scenario.events) == 1


GESTURE_AT_100 = parse_scenario('{"events":[{"at_ms":100,"kind":"ir_gesture"}]}')


class TestRunScenario:
    def test_golden_gesture_timing(self):
        # 180 degrees at 600 deg/s is a 300 ms sweep starting at t=100.
        transcript = run_scenario(GESTURE_AT_100, DeviceConfig(), tick_ms=10)
        opened = [r for r in transcript.records if r.state.position is Position.OPEN]
        assert opened
        assert abs(opened[0].t_ms - 400) <= 10
        assert opened[0].servo_angle_deg == 180.0

    def test_byte_identical_reruns(self):
        first = run_scenario(GESTURE_AT_100, DeviceConfig(), tick_ms=10).to_jsonl()
        second = run_scenario(GESTURE_AT_100, DeviceConfig(), tick_ms=10).to_jsonl()
        assert first == second

    def test_empty_scenario_settles_immediately(self):
        transcript = run_scenario(Scenario(), DeviceConfig(), tick_ms=10)
        assert len(transcript.records) == 1
        record = transcript.records[0]
        assert record.t_ms == 0
        assert record.state.position is Position.COVERING
        assert record.servo_angle_deg == 0.0

    def test_single_proximity_alert(self):
        scenario = parse_scenario('{"events":[{"at_ms":50,"kind":"pir_motion","distance_m":0.8}]}')
        transcript = run_scenario(scenario, DeviceConfig(), tick_ms=10)
        alerts = [a for r in transcript.records for a in r.alerts]
        assert len(alerts) == 1
        assert alerts[0].kind.value == "proximity"

    def test_tick_spacing_invariant(self):
        transcript = run_scenario(GESTURE_AT_100, DeviceConfig(), tick_ms=10)
        times = [r.t_ms for r in transcript.records]
        assert all(b - a == 10 for a, b in zip(times, times[1:]))

    def test_run_extends_until_settled(self):
        transcript = run_scenario(GESTURE_AT_100, DeviceConfig(), tick_ms=10)
        last = transcript.records[-1]
        assert last.servo_angle_deg == last.state.target_angle_deg

    def test_off_grid_event_lands_next_tick(self):
        scenario = parse_scenario('{"events":[{"at_ms":105,"kind":"ir_gesture"}]}')
        transcript = run_scenario(scenario, DeviceConfig(), tick_ms=10)
        commanded = [r for r in transcript.records if r.command is not None]
        assert commanded[0].t_ms == 110

    def test_no_overshoot_between_records(self):
        transcript = run_scenario(GESTURE_AT_100, DeviceConfig(), tick_ms=10)
        for before, after in zip(transcript.records, transcript.records[1:]):
            if before.state.target_angle_deg == after.state.target_angle_deg:
                target = after.state.target_angle_deg
                assert abs(after.servo_angle_deg - target) <= abs(before.servo_angle_deg - target)

    def test_event_conservation(self):
        # With debounce and cooldown off, every event leaves a visible mark:
        # each gesture a command, each near motion an alert.
        rng = random.Random(17)
        config = DeviceConfig(gesture_refractory_ms=0, alert_cooldown_ms=0)
        for _ in range(20):
            events = []
            t = 0
            gestures = motions = 0
            for _ in range(rng.randrange(1, 15)):
                t += rng.randrange(0, 300)
                if rng.random() < 0.5:
                    events.append({"at_ms": t, "kind": "ir_gesture"})
                    gestures += 1
                else:
                    events.append({"at_ms": t, "kind": "pir_motion", "distance_m": 0.3})
                    motions += 1
            scenario = parse_scenario(json.dumps({"events": events}))
            transcript = run_scenario(scenario, config, tick_ms=10)
            commands = sum(1 for r in transcript.records if r.command is not None)
            alerts = sum(len(r.alerts) for r in transcript.records)
            assert alerts == motions
            # Gestures within one tick collapse to the last command forwarded,
            # but each still toggles the firmware target.
            assert commands <= gestures
            final_target = transcript.records[-1].state.target_angle_deg
            assert final_target == (180.0 if gestures % 2 else 0.0)

    def test_bad_tick_rejected(self):
        with pytest.raises(ValueError):
            run_scenario(Scenario(), DeviceConfig(), tick_ms=0)

    def test_custom_config_endpoints(self):
        config = DeviceConfig(angle_covering=30.0, angle_open=150.0)
        transcript = run_scenario(GESTURE_AT_100, config, tick_ms=10)
        last = transcript.records[-1]
        assert last.state.position is Position.OPEN
        assert last.servo_angle_deg == 150.0
