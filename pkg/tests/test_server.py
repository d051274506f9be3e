import asyncio
import contextlib

from websockets.asyncio.client import connect as ws_connect

from conftest import LineClient

from smartmask.eventlog import replay, replay_file
from smartmask.firmware import DeviceConfig
from smartmask.protocol import (
    Ack,
    AlertFrame,
    ErrorFrame,
    GetState,
    SensorEventFrame,
    SetAngle,
    StateFrame,
    Subscribe,
    Toggle,
    decode_frame,
    encode_frame,
)
from smartmask.server import DeviceServer
from smartmask.simulator import parse_scenario


@contextlib.asynccontextmanager
async def loopback(**kwargs):
    server = DeviceServer(**kwargs)
    await server.start(tcp_port=0, ws_port=0)
    try:
        yield server
    finally:
        await server.stop()


async def collect_states_until_settled(client: LineClient, target: float) -> list[StateFrame]:
    states = []
    while True:
        frame = await client.recv()
        if isinstance(frame, StateFrame):
            states.append(frame)
            if frame.angle_deg == target and frame.target_deg == target:
                return states


def test_toggle_acks_and_broadcasts():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            sub = await LineClient.connect(host, port)
            assert isinstance(await sub.rpc(Subscribe()), StateFrame)

            sender = await LineClient.connect(host, port)
            assert await sender.rpc(Toggle()) == Ack(of="toggle")

            states = await collect_states_until_settled(sub, 180.0)
            assert states[0].target_deg == 180.0
            assert states[-1].position == "open"
            await sub.close()
            await sender.close()

    asyncio.run(main())


def test_get_state_snapshot():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            client = await LineClient.connect(host, port)
            state = await client.rpc(GetState())
            assert state == StateFrame(
                angle_deg=0.0,
                target_deg=0.0,
                position="covering",
                last_temp_c=None,
                alert_active=False,
            )
            await client.close()

    asyncio.run(main())


def test_out_of_range_command_rejected_without_state_change():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            client = await LineClient.connect(host, port)
            error = await client.rpc(SetAngle(angle=300))
            assert isinstance(error, ErrorFrame)
            assert error.code == "out_of_range"
            state = await client.rpc(GetState())
            assert state.target_deg == 0.0
            await client.close()

    asyncio.run(main())


def test_invalid_frames_are_isolated():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            offender = await LineClient.connect(host, port)
            bystander = await LineClient.connect(host, port)

            await offender.send_raw("this is not json")
            error = await offender.recv()
            assert isinstance(error, ErrorFrame) and error.code == "malformed"

            await offender.send_raw('{"type":"fly"}')
            error = await offender.recv()
            assert isinstance(error, ErrorFrame) and error.code == "unknown_type"

            # Outbound frame types are not commands.
            await offender.send_raw('{"type":"ack","of":"toggle"}')
            error = await offender.recv()
            assert isinstance(error, ErrorFrame) and error.code == "bad_value"

            # The bystander still gets a clean snapshot, state untouched.
            state = await bystander.rpc(GetState())
            assert state.target_deg == 0.0 and state.position == "covering"
            await offender.close()
            await bystander.close()

    asyncio.run(main())


def test_two_subscribers_see_identical_order():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            sub1 = await LineClient.connect(host, port)
            sub2 = await LineClient.connect(host, port)
            await sub1.rpc(Subscribe())
            await sub2.rpc(Subscribe())

            commander = await LineClient.connect(host, port)
            assert await commander.rpc(Toggle()) == Ack(of="toggle")

            seen1 = await collect_states_until_settled(sub1, 180.0)
            seen2 = await collect_states_until_settled(sub2, 180.0)
            assert seen1 == seen2
            await sub1.close()
            await sub2.close()
            await commander.close()

    asyncio.run(main())


def test_sensor_injection_broadcasts_alert():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            sub = await LineClient.connect(host, port)
            await sub.rpc(Subscribe())

            injector = await LineClient.connect(host, port)
            ack = await injector.rpc(SensorEventFrame(kind="pir_motion", distance_m=0.4))
            assert ack == Ack(of="sensor_event")

            frame = await sub.recv()
            while not isinstance(frame, AlertFrame):
                frame = await sub.recv()
            assert frame.kind == "proximity"
            assert frame.message == "keep safe distance"

            state = await injector.rpc(GetState())
            assert state.alert_active is True
            await sub.close()
            await injector.close()

    asyncio.run(main())


def test_temperature_reading_shows_in_state():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            client = await LineClient.connect(host, port)
            await client.rpc(SensorEventFrame(kind="temperature", celsius=36.6))
            state = await client.rpc(GetState())
            assert state.last_temp_c == 36.6
            assert state.alert_active is False
            await client.close()

    asyncio.run(main())


def test_servo_position_injection_refused():
    async def main():
        async with loopback() as server:
            host, port = server.tcp_address
            client = await LineClient.connect(host, port)
            error = await client.rpc(SensorEventFrame(kind="servo_position", angle_deg=90.0))
            assert isinstance(error, ErrorFrame) and error.code == "bad_value"
            await client.close()

    asyncio.run(main())


def test_websocket_speaks_the_same_protocol():
    async def main():
        async with loopback() as server:
            ws_host, ws_port = server.ws_address
            async with ws_connect(f"ws://{ws_host}:{ws_port}") as ws:
                await ws.send(encode_frame(Subscribe()))
                first = decode_frame(await ws.recv())
                assert isinstance(first, StateFrame)

                await ws.send(encode_frame(Toggle()))
                frame = decode_frame(await ws.recv())
                assert frame == Ack(of="toggle")

                # Broadcast states then stream over the same socket.
                while True:
                    frame = decode_frame(await ws.recv())
                    if isinstance(frame, StateFrame) and frame.angle_deg == 180.0:
                        break

    asyncio.run(main())


def test_background_scenario_injection():
    # Leave the subscriber comfortable time to attach before events fire.
    scenario = parse_scenario(
        '{"events":[{"at_ms":150,"kind":"pir_motion","distance_m":0.5},'
        '{"at_ms":200,"kind":"temperature","celsius":39.0}]}'
    )

    async def main():
        async with loopback(scenario=scenario) as server:
            host, port = server.tcp_address
            sub = await LineClient.connect(host, port)
            await sub.rpc(Subscribe())
            kinds = set()
            while len(kinds) < 2:
                frame = await sub.recv()
                if isinstance(frame, AlertFrame):
                    kinds.add(frame.kind)
            assert kinds == {"proximity", "fever"}
            await sub.close()

    asyncio.run(main())


def test_session_log_replays_to_live_state(tmp_path):
    log_path = tmp_path / "session.jsonl"

    async def main():
        async with loopback(log_path=str(log_path)) as server:
            host, port = server.tcp_address
            client = await LineClient.connect(host, port)
            await client.rpc(Toggle())
            await client.rpc(SetAngle(angle=45))
            await client.rpc(SensorEventFrame(kind="pir_motion", distance_m=0.2))
            await asyncio.sleep(0.5)  # let the servo settle
            final = await client.rpc(GetState())
            assert final.angle_deg == 45
            await client.close()
            return server.state, server.log.records

    live_state, records = asyncio.run(main())
    assert replay(records) == live_state
    assert replay_file(str(log_path)) == live_state


def test_heartbeat_reaches_idle_subscriber():
    async def main():
        async with loopback(heartbeat_ms=100) as server:
            host, port = server.tcp_address
            sub = await LineClient.connect(host, port)
            await sub.rpc(Subscribe())
            first = await sub.recv()
            second = await sub.recv()
            assert isinstance(first, StateFrame) and isinstance(second, StateFrame)
            await sub.close()

    asyncio.run(main())
