"""Modbus TCP codec and polling client.

Read-only subset: function codes 0x01 (coils) and 0x03 (holding
registers), which is all the environmental poller needs. The codec is
bit-exact against the published MBAP + PDU framing and is shared by the
client here and the simulator's server side. All multi-byte fields are
big-endian.
"""

import enum
import logging
import socket
import struct
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .records import SensorReading

log = logging.getLogger(__name__)

MAX_REGISTERS_PER_READ = 125
MAX_COILS_PER_READ = 2000

_MBAP = struct.Struct(">HHHB")  # txId, protocolId, length, unitId


class FunctionCode(enum.IntEnum):
    READ_COILS = 0x01
    READ_HOLDING_REGISTERS = 0x03


class ExceptionCode(enum.IntEnum):
    ILLEGAL_FUNCTION = 0x01
    ILLEGAL_DATA_ADDRESS = 0x02
    ILLEGAL_DATA_VALUE = 0x03
    SERVER_DEVICE_FAILURE = 0x04


class ModbusError(Exception):
    pass


class QuantityOutOfRange(ModbusError):
    pass


class TransactionMismatch(ModbusError):
    pass


class TruncatedFrame(ModbusError):
    pass


class ExceptionResponse(ModbusError):
    """Server replied with function | 0x80 and an exception code."""

    def __init__(self, code: int):
        try:
            self.code = ExceptionCode(code)
        except ValueError:
            self.code = code  # unknown codes pass through numerically
        super().__init__(f"modbus exception {self.code!r}")


class ConnectionFailed(ModbusError):
    pass


@dataclass(frozen=True)
class ModbusRequest:
    transaction_id: int
    unit_id: int
    function: FunctionCode
    start_address: int
    quantity: int

    def validate(self) -> None:
        limit = (
            MAX_COILS_PER_READ
            if self.function is FunctionCode.READ_COILS
            else MAX_REGISTERS_PER_READ
        )
        if not 1 <= self.quantity <= limit:
            raise QuantityOutOfRange(
                f"quantity {self.quantity} outside [1, {limit}] for {self.function.name}"
            )
        if not 0 <= self.start_address <= 0xFFFF:
            raise ModbusError(f"start address {self.start_address} outside u16")


# -- wire codec --------------------------------------------------------


def encode_request(req: ModbusRequest) -> bytes:
    """12-byte read request: MBAP header (length always 6) + PDU."""
    req.validate()
    return _MBAP.pack(req.transaction_id, 0, 6, req.unit_id) + struct.pack(
        ">BHH", req.function, req.start_address, req.quantity
    )


def decode_request(frame: bytes) -> ModbusRequest:
    """Parse a client read request (server side)."""
    if len(frame) < 12:
        raise TruncatedFrame(f"request frame is {len(frame)} bytes, need 12")
    tx, _proto, _length, unit = _MBAP.unpack(frame[:7])
    function, address, quantity = struct.unpack(">BHH", frame[7:12])
    return ModbusRequest(tx, unit, FunctionCode(function), address, quantity)


def encode_response(req: ModbusRequest, values: Sequence[int]) -> bytes:
    """Encode register or coil values for a previously decoded request."""
    if req.function is FunctionCode.READ_HOLDING_REGISTERS:
        body = struct.pack(">BB", req.function, 2 * len(values))
        body += struct.pack(f">{len(values)}H", *values)
    else:
        nbytes = (len(values) + 7) // 8
        packed = bytearray(nbytes)
        for i, bit in enumerate(values):
            if bit:
                packed[i // 8] |= 1 << (i % 8)  # LSB-first per protocol
        body = struct.pack(">BB", req.function, nbytes) + bytes(packed)
    return _MBAP.pack(req.transaction_id, 0, len(body) + 1, req.unit_id) + body


def encode_exception(req: ModbusRequest, code: int) -> bytes:
    body = struct.pack(">BB", req.function | 0x80, code)
    return _MBAP.pack(req.transaction_id, 0, len(body) + 1, req.unit_id) + body


def decode_response(
    frame: bytes, expected: ModbusRequest
) -> Union[list[int], list[bool]]:
    """Decode a response frame against the request that produced it.

    Registers come back as big-endian u16 pairs, coils LSB-first.
    Raises ExceptionResponse / TransactionMismatch / TruncatedFrame.
    """
    if len(frame) < 9:
        raise TruncatedFrame(f"response frame is {len(frame)} bytes")
    tx, _proto, length, _unit = _MBAP.unpack(frame[:7])
    body = frame[7:]
    if len(body) != length - 1:
        raise TruncatedFrame(f"body is {len(body)} bytes, header says {length - 1}")
    function = body[0]
    if function & 0x80:
        raise ExceptionResponse(body[1])
    if tx != expected.transaction_id:
        raise TransactionMismatch(f"txId {tx} != expected {expected.transaction_id}")
    if function != expected.function:
        raise ModbusError(f"function {function:#x} != expected {expected.function:#x}")
    byte_count = body[1]
    payload = body[2:]
    if len(payload) != byte_count:
        raise TruncatedFrame(f"payload {len(payload)} bytes, byte count {byte_count}")
    if expected.function is FunctionCode.READ_HOLDING_REGISTERS:
        if byte_count != 2 * expected.quantity:
            raise TruncatedFrame(
                f"got {byte_count // 2} registers, expected {expected.quantity}"
            )
        return list(struct.unpack(f">{expected.quantity}H", payload))
    bits: list[bool] = []
    for i in range(expected.quantity):
        bits.append(bool(payload[i // 8] >> (i % 8) & 1))
    return bits


# -- register map ------------------------------------------------------


@dataclass(frozen=True)
class U16Scaled:
    scale: float

    def decode(self, raw: int) -> float:
        return raw * self.scale


@dataclass(frozen=True)
class BitField:
    bit: int

    def decode(self, raw: int) -> float:
        return 1.0 if raw >> self.bit & 1 else 0.0


Encoding = Union[U16Scaled, BitField]


@dataclass(frozen=True)
class RegisterPoint:
    """One monitored point in the register map."""

    point_id: str
    address: int
    encoding: Encoding
    unit: str
    zone: str = ""

    def __post_init__(self) -> None:
        if isinstance(self.encoding, U16Scaled) and self.encoding.scale <= 0:
            raise ValueError(f"{self.point_id}: scale must be > 0")
        if isinstance(self.encoding, BitField) and not 0 <= self.encoding.bit <= 15:
            raise ValueError(f"{self.point_id}: bit must be in 0..15")


def decode_point(point: RegisterPoint, raw: int) -> float:
    return point.encoding.decode(raw)


def load_register_map(path: str) -> list[RegisterPoint]:
    """Register map TSV: pointId, address, encoding, scale/bit, unit, zone."""
    points: list[RegisterPoint] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            point_id, addr_s, kind, param, unit, zone = parts
            if point_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate pointId {point_id!r}")
            seen.add(point_id)
            if kind == "u16":
                enc: Encoding = U16Scaled(float(param))
            elif kind == "bit":
                enc = BitField(int(param))
            else:
                raise ValueError(f"{path}:{lineno}: unknown encoding {kind!r}")
            points.append(RegisterPoint(point_id, int(addr_s), enc, unit, zone))
    return points


def save_register_map(points: Sequence[RegisterPoint], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in points:
            if isinstance(p.encoding, U16Scaled):
                kind, param = "u16", repr(p.encoding.scale)
            else:
                kind, param = "bit", str(p.encoding.bit)
            fh.write(f"{p.point_id}\t{p.address}\t{kind}\t{param}\t{p.unit}\t{p.zone}\n")


# -- polling client ----------------------------------------------------


@dataclass
class PollResult:
    readings: list[SensorReading]
    failed_points: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def partial(self) -> bool:
        return bool(self.failed_points)


class ModbusClient:
    """Blocking Modbus TCP client; one instance per endpoint connection."""

    def __init__(self, host: str, port: int = 1502, unit_id: int = 1, timeout: float = 5.0):
        self.host = host
        self.port = port
        self.unit_id = unit_id
        self.timeout = timeout
        self._sock: Optional[socket.socket] = None
        self._tx = 0

    def connect(self) -> None:
        try:
            self._sock = socket.create_connection((self.host, self.port), self.timeout)
        except OSError as exc:
            raise ConnectionFailed(f"{self.host}:{self.port}: {exc}") from exc

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self) -> "ModbusClient":
        self.connect()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def _recv_exact(self, n: int) -> bytes:
        assert self._sock is not None
        buf = b""
        while len(buf) < n:
            chunk = self._sock.recv(n - len(buf))
            if not chunk:
                raise ConnectionFailed("connection closed mid-frame")
            buf += chunk
        return buf

    def _transact(self, function: FunctionCode, address: int, quantity: int) -> Union[list[int], list[bool]]:
        if self._sock is None:
            self.connect()
        assert self._sock is not None
        self._tx = (self._tx + 1) & 0xFFFF
        req = ModbusRequest(self._tx, self.unit_id, function, address, quantity)
        try:
            self._sock.sendall(encode_request(req))
            header = self._recv_exact(7)
            _tx, _proto, length, _unit = _MBAP.unpack(header)
            body = self._recv_exact(length - 1)
        except OSError as exc:
            raise ConnectionFailed(str(exc)) from exc
        return decode_response(header + body, req)

    def read_holding_registers(self, address: int, quantity: int) -> list[int]:
        return self._transact(FunctionCode.READ_HOLDING_REGISTERS, address, quantity)  # type: ignore[return-value]

    def read_coils(self, address: int, quantity: int) -> list[bool]:
        return self._transact(FunctionCode.READ_COILS, address, quantity)  # type: ignore[return-value]


def plan_batches(points: Sequence[RegisterPoint], batching: bool = True) -> list[tuple[int, int]]:
    """Coalesce point addresses into (start, count) register reads.

    Contiguous (or shared) addresses merge into one read of at most
    MAX_REGISTERS_PER_READ registers; gaps always split.
    """
    addresses = sorted({p.address for p in points})
    if not addresses:
        return []
    if not batching:
        return [(a, 1) for a in addresses]
    batches: list[tuple[int, int]] = []
    start = prev = addresses[0]
    for addr in addresses[1:]:
        if addr == prev + 1 and addr - start < MAX_REGISTERS_PER_READ:
            prev = addr
            continue
        batches.append((start, prev - start + 1))
        start = prev = addr
    batches.append((start, prev - start + 1))
    return batches


def poll_map(
    client: ModbusClient,
    points: Sequence[RegisterPoint],
    source: str = "ecopod",
    timestamp: Optional[int] = None,
    batching: bool = True,
) -> PollResult:
    """Read every point once; all readings share one poll-cycle timestamp.

    A failed batch is retried address-by-address so only the genuinely
    unreadable points land in failed_points; surviving readings are
    still returned.
    """
    t_start = time.monotonic()
    cycle_ts = int(time.time()) if timestamp is None else timestamp
    by_address: dict[int, list[RegisterPoint]] = {}
    for p in points:
        by_address.setdefault(p.address, []).append(p)

    raw: dict[int, int] = {}
    failed_addresses: set[int] = set()
    for start, count in plan_batches(points, batching):
        try:
            values = client.read_holding_registers(start, count)
        except ExceptionResponse:
            for addr in range(start, start + count):
                if addr not in by_address:
                    continue
                try:
                    raw[addr] = client.read_holding_registers(addr, 1)[0]
                except ExceptionResponse:
                    failed_addresses.add(addr)
            continue
        for offset, value in enumerate(values):
            raw[start + offset] = value

    readings: list[SensorReading] = []
    failed: list[str] = []
    for p in points:
        if p.address in raw:
            readings.append(
                SensorReading(source, p.point_id, cycle_ts, decode_point(p, raw[p.address]), p.unit)
            )
        else:
            failed.append(p.point_id)
    if failed:
        log.warning("partial poll: %d points unreadable (%s...)", len(failed), failed[0])
    return PollResult(readings, failed, time.monotonic() - t_start)
