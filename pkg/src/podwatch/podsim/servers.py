"""TCP faces of the simulator: Modbus registers, telemetry, node control.

Each server reads an immutable snapshot published by the simulator tick,
so concurrent polls never observe a torn state.
"""

import json
import logging
import socketserver
import struct
import threading
from typing import Callable

from .. import modbus
from ..records import NodeRecord

log = logging.getLogger(__name__)


class BindFailed(OSError):
    pass


class _ThreadedServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class _BaseServer:
    """start()/stop() wrapper around a ThreadingTCPServer."""

    def __init__(self, host: str, port: int):
        self._host = host
        self._requested_port = port
        self._server: _ThreadedServer | None = None
        self._thread: threading.Thread | None = None

    def _handler_class(self) -> type:
        raise NotImplementedError

    def start(self) -> None:
        try:
            self._server = _ThreadedServer((self._host, self._requested_port), self._handler_class())
        except OSError as exc:
            raise BindFailed(f"{self._host}:{self._requested_port}: {exc}") from exc
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def port(self) -> int:
        assert self._server is not None, "server not started"
        return self._server.server_address[1]

    def __enter__(self) -> "_BaseServer":
        self.start()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.stop()


class ModbusTcpServer(_BaseServer):
    """Serves FC 0x01/0x03 from register/coil snapshot callables.

    A read touching any unmapped address answers exception 0x02
    (IllegalDataAddress); unsupported function codes answer 0x01.
    """

    def __init__(
        self,
        registers: Callable[[], dict[int, int]],
        coils: Callable[[], dict[int, int]] | None = None,
        host: str = "127.0.0.1",
        port: int = 1502,
    ):
        super().__init__(host, port)
        self._registers = registers
        self._coils = coils or (lambda: {})

    def _handler_class(self) -> type:
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self) -> None:
                try:
                    while True:
                        header = self._recv_exact(7)
                        if header is None:
                            return
                        _tx, _proto, length, _unit = struct.unpack(">HHHB", header)
                        body = self._recv_exact(length - 1)
                        if body is None:
                            return
                        self.request.sendall(outer._respond(header + body))
                except (ConnectionError, OSError):
                    return

            def _recv_exact(self, n: int) -> bytes | None:
                buf = b""
                while len(buf) < n:
                    chunk = self.request.recv(n - len(buf))
                    if not chunk:
                        return None
                    buf += chunk
                return buf

        return Handler

    def _respond(self, frame: bytes) -> bytes:
        try:
            req = modbus.decode_request(frame)
        except (ValueError, modbus.ModbusError):
            # unparseable function code: answer IllegalFunction on a stub request
            tx = struct.unpack(">H", frame[:2])[0]
            stub = modbus.ModbusRequest(tx, frame[6], modbus.FunctionCode.READ_HOLDING_REGISTERS, 0, 1)
            return modbus.encode_exception(stub, modbus.ExceptionCode.ILLEGAL_FUNCTION)
        try:
            req.validate()
        except modbus.QuantityOutOfRange:
            return modbus.encode_exception(req, modbus.ExceptionCode.ILLEGAL_DATA_VALUE)
        table = (
            self._registers()
            if req.function is modbus.FunctionCode.READ_HOLDING_REGISTERS
            else self._coils()
        )
        wanted = range(req.start_address, req.start_address + req.quantity)
        if any(a not in table for a in wanted):
            return modbus.encode_exception(req, modbus.ExceptionCode.ILLEGAL_DATA_ADDRESS)
        return modbus.encode_response(req, [table[a] for a in wanted])


class TelemetryServer(_BaseServer):
    """One JSON line per node record, then close — the collector pull face."""

    def __init__(self, records: Callable[[], list[NodeRecord]], host: str = "127.0.0.1", port: int = 1503):
        super().__init__(host, port)
        self._records = records

    def _handler_class(self) -> type:
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self) -> None:
                try:
                    payload = "".join(
                        json.dumps(r.to_json_dict(), sort_keys=True) + "\n"
                        for r in outer._records()
                    )
                    self.request.sendall(payload.encode("utf-8"))
                except (ConnectionError, OSError):
                    return

        return Handler


def collect_telemetry(host: str, port: int, timeout: float = 10.0) -> list[NodeRecord]:
    """Client side of TelemetryServer."""
    import socket

    with socket.create_connection((host, port), timeout) as sock:
        sock.settimeout(timeout)
        chunks = []
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            chunks.append(chunk)
    text = b"".join(chunks).decode("utf-8")
    return [NodeRecord.from_json_dict(json.loads(line)) for line in text.splitlines() if line]


class ControlServer(_BaseServer):
    """JSON-lines request/response for operator actions against the twin."""

    def __init__(self, handler: Callable[[dict], dict], host: str = "127.0.0.1", port: int = 1504):
        super().__init__(host, port)
        self._handle = handler

    def _handler_class(self) -> type:
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self) -> None:
                try:
                    for raw in self.rfile:
                        line = raw.strip()
                        if not line:
                            continue
                        try:
                            response = outer._handle(json.loads(line))
                        except Exception as exc:  # adapter errors travel as payload
                            response = {"ok": False, "error": str(exc)}
                        self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
                except (ConnectionError, OSError):
                    return

        return Handler


def send_control(host: str, port: int, request: dict, timeout: float = 10.0) -> dict:
    """Client side of ControlServer."""
    import socket

    with socket.create_connection((host, port), timeout) as sock:
        sock.settimeout(timeout)
        sock.sendall((json.dumps(request) + "\n").encode("utf-8"))
        fh = sock.makefile("r", encoding="utf-8")
        line = fh.readline()
    if not line:
        raise ConnectionError("control server closed without responding")
    return json.loads(line)
