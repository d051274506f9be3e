"""Shared test plumbing: a minimal NDJSON loopback client and port helpers."""

from __future__ import annotations

import asyncio
import socket
import time

from smartmask.protocol import Frame, decode_frame, encode_frame


class LineClient:
    """Newline-delimited JSON client for driving a live device in tests."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def connect(cls, host: str, port: int) -> "LineClient":
        reader, writer = await asyncio.open_connection(host, port)
        return cls(reader, writer)

    async def send(self, frame: Frame) -> None:
        self.writer.write((encode_frame(frame) + "\n").encode("utf-8"))
        await self.writer.drain()

    async def send_raw(self, line: str) -> None:
        self.writer.write((line + "\n").encode("utf-8"))
        await self.writer.drain()

    async def recv(self, timeout: float = 2.0) -> Frame:
        raw = await asyncio.wait_for(self.reader.readline(), timeout)
        if not raw:
            raise ConnectionError("server closed the connection")
        return decode_frame(raw.decode("utf-8"))

    async def rpc(self, frame: Frame, timeout: float = 2.0) -> Frame:
        await self.send(frame)
        return await self.recv(timeout)

    async def close(self) -> None:
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def wait_for_port(host: str, port: int, timeout: float = 5.0) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            with socket.create_connection((host, port), timeout=0.2):
                return
        except OSError:
            time.sleep(0.05)
    raise TimeoutError(f"nothing listening on {host}:{port}")
