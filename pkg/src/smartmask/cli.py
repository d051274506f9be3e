"""Command-line entry point.

Exit codes are a stable contract: 0 success, 1 remote error, 2 input
error, 3 bind error, 4 corrupt log. Human-readable diagnostics go to
stderr, machine-readable JSON to stdout, so pipelines stay clean.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import socket
import sys
from typing import Optional

from .eventlog import CorruptLogError, replay_file
from .firmware import DeviceConfig
from .protocol import ErrorFrame, Frame, GetState, SetAngle, Toggle, decode_frame, encode_frame
from .server import DEFAULT_TCP_PORT, DEFAULT_WS_PORT, DeviceServer
from .simulator import ScenarioError, load_scenario, run_scenario

EXIT_OK = 0
EXIT_REMOTE_ERROR = 1
EXIT_INPUT_ERROR = 2
EXIT_BIND_ERROR = 3
EXIT_CORRUPT_LOG = 4

_CONFIG_FIELDS = {
    "angle_covering",
    "angle_open",
    "proximity_threshold_m",
    "fever_threshold_c",
    "gesture_refractory_ms",
    "alert_cooldown_ms",
}


def _fail(message: str, code: int) -> int:
    print(f"smartmask: {message}", file=sys.stderr)
    return code


def load_config(path: Optional[str]) -> DeviceConfig:
    """Optional JSON config mirroring DeviceConfig field names; absent
    fields take the documented defaults."""
    if path is None:
        return DeviceConfig()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return DeviceConfig(**data)


def _parse_addr(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be HOST:PORT, got {text!r}")
    return host, int(port)


def _angle_arg(text: str) -> float:
    value = float(text)
    return int(value) if value.is_integer() else value


# --- run ----------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    if args.tick_ms <= 0:
        return _fail("--tick-ms must be > 0", EXIT_INPUT_ERROR)
    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        return _fail(f"cannot read scenario {args.scenario}: {exc}", EXIT_INPUT_ERROR)
    except ScenarioError as exc:
        return _fail(f"invalid scenario {args.scenario}: {exc}", EXIT_INPUT_ERROR)
    try:
        config = load_config(args.config)
    except OSError as exc:
        return _fail(f"cannot read config {args.config}: {exc}", EXIT_INPUT_ERROR)
    except (ValueError, TypeError) as exc:
        return _fail(f"invalid config {args.config}: {exc}", EXIT_INPUT_ERROR)

    transcript = run_scenario(scenario, config, tick_ms=args.tick_ms)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(transcript.to_jsonl())
    except OSError as exc:
        return _fail(f"cannot write transcript {args.out}: {exc}", EXIT_INPUT_ERROR)
    print(
        f"smartmask: wrote {len(transcript.records)} records to {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


# --- serve ---------------------------------------------------------------------


async def _serve(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        scenario = load_scenario(args.scenario) if args.scenario else None
    except OSError as exc:
        return _fail(f"cannot read input: {exc}", EXIT_INPUT_ERROR)
    except (ScenarioError, ValueError, TypeError) as exc:
        return _fail(f"invalid input: {exc}", EXIT_INPUT_ERROR)
    try:
        host, port = _parse_addr(args.listen)
        ws_host, ws_port = _parse_addr(args.ws_listen)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT_ERROR)

    server = DeviceServer(config=config, log_path=args.log, scenario=scenario)
    try:
        await server.start(host, port, ws_host=ws_host, ws_port=ws_port)
    except OSError as exc:
        return _fail(f"cannot bind: {exc}", EXIT_BIND_ERROR)
    print(
        f"smartmask: serving tcp on {args.listen}, websocket on {args.ws_listen}",
        file=sys.stderr,
    )
    try:
        await server.run_forever()
    finally:
        await server.stop()
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        return asyncio.run(_serve(args))
    except KeyboardInterrupt:
        print("smartmask: interrupted", file=sys.stderr)
        return EXIT_OK


# --- replay --------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except OSError as exc:
        return _fail(f"cannot read config {args.config}: {exc}", EXIT_INPUT_ERROR)
    except (ValueError, TypeError) as exc:
        return _fail(f"invalid config {args.config}: {exc}", EXIT_INPUT_ERROR)
    try:
        state = replay_file(args.log, config)
    except OSError as exc:
        return _fail(f"cannot read log {args.log}: {exc}", EXIT_INPUT_ERROR)
    except CorruptLogError as exc:
        return _fail(str(exc), EXIT_CORRUPT_LOG)
    print(json.dumps(state.to_dict(), sort_keys=True))
    return EXIT_OK


# --- send ----------------------------------------------------------------------


def cmd_send(args: argparse.Namespace) -> int:
    try:
        host, port = _parse_addr(args.addr)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT_ERROR)

    frame: Frame
    if args.toggle:
        frame = Toggle()
    elif args.get_state:
        frame = GetState()
    else:
        frame = SetAngle(angle=args.angle)

    try:
        with socket.create_connection((host, port), timeout=5.0) as sock:
            sock.sendall((encode_frame(frame) + "\n").encode("utf-8"))
            with sock.makefile("r", encoding="utf-8") as fh:
                line = fh.readline()
    except OSError as exc:
        return _fail(f"cannot reach {args.addr}: {exc}", EXIT_REMOTE_ERROR)
    line = line.strip()
    if not line:
        return _fail("connection closed without a response", EXIT_REMOTE_ERROR)
    print(line)
    response = decode_frame(line)
    return EXIT_REMOTE_ERROR if isinstance(response, ErrorFrame) else EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartmask",
        description="Simulated SmartMask device: scenario runner, live server, log replay, test client.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario to a transcript file")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--config", help="device config JSON file")
    p_run.add_argument("--tick-ms", type=int, default=10, help="simulation tick (default 10)")
    p_run.add_argument("--out", required=True, help="transcript JSONL output path")
    p_run.set_defaults(func=cmd_run)

    p_serve = sub.add_parser("serve", help="serve a live simulated device")
    p_serve.add_argument("--listen", default=f"127.0.0.1:{DEFAULT_TCP_PORT}", help="TCP HOST:PORT")
    p_serve.add_argument(
        "--ws-listen", default=f"127.0.0.1:{DEFAULT_WS_PORT}", help="WebSocket HOST:PORT"
    )
    p_serve.add_argument("--log", help="session event log JSONL path")
    p_serve.add_argument("--scenario", help="background scenario to inject while serving")
    p_serve.add_argument("--config", help="device config JSON file")
    p_serve.set_defaults(func=cmd_serve)

    p_replay = sub.add_parser("replay", help="rebuild final device state from a session log")
    p_replay.add_argument("--log", required=True, help="session event log JSONL path")
    p_replay.add_argument("--config", help="device config JSON file (must match the session)")
    p_replay.set_defaults(func=cmd_replay)

    p_send = sub.add_parser("send", help="send one command to a running device")
    p_send.add_argument("--addr", required=True, help="device TCP HOST:PORT")
    group = p_send.add_mutually_exclusive_group(required=True)
    group.add_argument("--toggle", action="store_true", help="toggle open/covering")
    group.add_argument("--angle", type=_angle_arg, help="set an absolute angle")
    group.add_argument("--get-state", action="store_true", help="query current state")
    p_send.set_defaults(func=cmd_send)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
