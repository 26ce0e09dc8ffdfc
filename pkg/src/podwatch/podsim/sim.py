"""Simulator: binds the pod and cluster twins, serves state as registers.

The register map is data, not code: the default map is generated here
(and can be padded with aux sensors to any point count), written to TSV,
and consumed unchanged by the polling side.
"""

import zlib
from dataclasses import dataclass

from ..modbus import BitField, RegisterPoint, U16Scaled
from ..records import NodeRecord
from .cluster import ClusterConfig, ClusterSim, UnknownHost, UnknownJob
from .pod import PodConfig, PodSim

STATUS_BITS = ("mechanical_cooling", "economizer", "water_alarm", "fire_alarm")


class FaultError(ValueError):
    """Fault references an unknown zone, feed, host, or job."""


@dataclass(frozen=True)
class ScriptEvent:
    at_time: float
    kind: str
    args: tuple[str, ...]


_EVENT_ARGC = {
    "water": 1,          # zone
    "power_spike": 2,    # feed, kW
    "fire": 0,
    "temp_ramp": 2,      # zone, °C/s
    "memory_leak": 1,    # jobId
    "image_drift": 1,    # hostname
    "submit_job": 4,     # jobId, user, nodes, coresPerNode
    "end_job": 1,        # jobId
}


def parse_script_text(text: str) -> list[ScriptEvent]:
    """Fault/scenario script TSV: time<TAB>kind<TAB>comma-joined args."""
    events: list[ScriptEvent] = []
    last_time = float("-inf")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected time<TAB>kind[<TAB>args]")
        at_time = float(parts[0])
        kind = parts[1]
        args = tuple(parts[2].split(",")) if len(parts) == 3 and parts[2] else ()
        if kind not in _EVENT_ARGC:
            raise ValueError(f"line {lineno}: unknown event kind {kind!r}")
        if len(args) != _EVENT_ARGC[kind]:
            raise ValueError(
                f"line {lineno}: {kind} takes {_EVENT_ARGC[kind]} args, got {len(args)}"
            )
        if at_time < last_time:
            raise ValueError(f"line {lineno}: event times must be non-decreasing")
        last_time = at_time
        events.append(ScriptEvent(at_time, kind, args))
    return events


def parse_script(path: str) -> list[ScriptEvent]:
    with open(path, encoding="utf-8") as fh:
        return parse_script_text(fh.read())


def build_register_map(
    zones: tuple[str, ...],
    feeds: tuple[str, ...] = ("feedA", "feedB"),
    target_points: int | None = None,
) -> list[RegisterPoint]:
    """Generate the pod register map; aux sensors pad to target_points."""
    points: list[RegisterPoint] = []
    addr = 0
    for z in zones:
        points.append(RegisterPoint(f"{z}.temp", addr, U16Scaled(0.1), "°C", z)); addr += 1
        points.append(RegisterPoint(f"{z}.humidity", addr, U16Scaled(0.1), "%RH", z)); addr += 1
        points.append(RegisterPoint(f"{z}.pressure", addr, U16Scaled(0.1), "Pa", z)); addr += 1
        points.append(RegisterPoint(f"{z}.airflow", addr, U16Scaled(1.0), "m3/h", z)); addr += 1
    for f in feeds:
        points.append(RegisterPoint(f"{f}.power", addr, U16Scaled(0.1), "kW", "pod")); addr += 1
    points.append(RegisterPoint("facility.power", addr, U16Scaled(0.1), "kW", "pod")); addr += 1
    status_addr = addr
    addr += 1
    for bit, name in enumerate(STATUS_BITS):
        points.append(RegisterPoint(f"status.{name}", status_addr, BitField(bit), "bool", "pod"))
    if target_points is not None:
        i = 0
        while len(points) < target_points:
            zone = zones[i % len(zones)]
            points.append(RegisterPoint(f"aux.s{i:05d}", addr, U16Scaled(0.1), "°C", zone))
            addr += 1
            i += 1
        if addr > 0xFFFF:
            raise ValueError(f"register map exceeds u16 address space ({addr})")
    return points


def _aux_offset(point_id: str) -> float:
    return (zlib.crc32(point_id.encode()) % 600) / 100.0 - 3.0


class Simulator:
    """Deterministic twin: same seed + same script => identical output."""

    def __init__(
        self,
        pod_config: PodConfig | None = None,
        cluster_config: ClusterConfig | None = None,
        register_map: list[RegisterPoint] | None = None,
        script: list[ScriptEvent] | None = None,
        start_epoch: int = 1_700_000_000,
    ):
        self.pod_config = pod_config or PodConfig()
        cluster_config = cluster_config or ClusterConfig()
        if not cluster_config.zones:
            cluster_config = ClusterConfig(
                **{**cluster_config.__dict__, "zones": self.pod_config.zones}
            )
        self.pod = PodSim(self.pod_config)
        self.cluster = ClusterSim(cluster_config)
        self.map = register_map if register_map is not None else build_register_map(self.pod_config.zones)
        self._check_map(self.map)
        self.script = list(script or [])
        self._next_event = 0
        self.start_epoch = start_epoch
        self.clock = 0.0
        self._registers: dict[int, int] = {}
        self._rebuild_registers()

    def _check_map(self, points: list[RegisterPoint]) -> None:
        scaled_addrs: set[int] = set()
        for p in points:
            if isinstance(p.encoding, U16Scaled):
                if p.address in scaled_addrs:
                    raise ValueError(f"register map: scaled address {p.address} reused")
                scaled_addrs.add(p.address)

    # -- time ---------------------------------------------------------------

    def now(self) -> int:
        return int(self.start_epoch + self.clock)

    def advance(self, dt: float) -> None:
        """Fire due script events, then step both twins by dt."""
        if dt <= 0:
            raise ValueError("dt must be > 0")
        due_until = self.clock + dt
        while self._next_event < len(self.script) and self.script[self._next_event].at_time <= due_until:
            self.apply_event(self.script[self._next_event])
            self._next_event += 1
        self.cluster.step(dt)
        ts = int(self.start_epoch + due_until)
        self.pod.step(dt, self.cluster.zone_it_kw(ts), self.cluster.feed_it_kw(ts))
        self.clock = due_until
        self._rebuild_registers()

    # -- faults / scenario events ---------------------------------------------

    def apply_event(self, event: ScriptEvent) -> None:
        kind, args = event.kind, event.args
        try:
            if kind == "water":
                self.pod.inject_water(args[0])
            elif kind == "power_spike":
                self.pod.inject_power_spike(args[0], float(args[1]))
            elif kind == "fire":
                self.pod.inject_fire()
            elif kind == "temp_ramp":
                self.pod.inject_temp_ramp(args[0], float(args[1]))
            elif kind == "memory_leak":
                self.cluster.inject_memory_leak(args[0])
            elif kind == "image_drift":
                self.cluster.inject_image_drift(args[0])
            elif kind == "submit_job":
                self.cluster.submit_job(args[0], args[1], int(args[2]), int(args[3]))
            elif kind == "end_job":
                self.cluster.end_job(args[0])
            else:
                raise FaultError(f"unknown event kind {kind!r}")
        except (KeyError, UnknownHost, UnknownJob) as exc:
            raise FaultError(f"{kind}: {exc}") from exc

    # -- register serving -------------------------------------------------------

    def point_value(self, point: RegisterPoint) -> float:
        """Ground-truth value for one map point (pre-quantization)."""
        state = self.pod.state
        head, _, metric = point.point_id.partition(".")
        if head in state.zone_temp:
            return {
                "temp": state.zone_temp,
                "humidity": state.zone_humidity,
                "pressure": state.zone_pressure,
                "airflow": state.zone_airflow,
            }[metric][head]
        if head in state.feed_it_kw:
            return state.feed_power(head)
        if head == "facility":
            return state.facility_kw + sum(state.feed_spike_kw.values())
        if head == "status":
            return 1.0 if getattr(state, metric if metric != "economizer" else "economizer_mode") else 0.0
        if head == "aux":
            return state.zone_temp[point.zone] + _aux_offset(point.point_id)
        raise KeyError(f"unmapped point {point.point_id!r}")

    def point_values(self) -> dict[str, float]:
        return {p.point_id: self.point_value(p) for p in self.map}

    def _rebuild_registers(self) -> None:
        regs: dict[int, int] = {}
        for p in self.map:
            value = self.point_value(p)
            if isinstance(p.encoding, U16Scaled):
                regs[p.address] = max(0, min(0xFFFF, round(value / p.encoding.scale)))
            else:
                regs.setdefault(p.address, 0)
                if value >= 0.5:
                    regs[p.address] |= 1 << p.encoding.bit
        self._registers = regs

    @property
    def registers(self) -> dict[int, int]:
        return self._registers

    @property
    def coils(self) -> dict[int, int]:
        """Status flags mirrored into the coil address space."""
        state = self.pod.state
        flags = (
            state.mechanical_cooling,
            state.economizer_mode,
            state.water_alarm,
            state.fire_alarm,
        )
        return {i: int(f) for i, f in enumerate(flags)}

    # -- telemetry + control ------------------------------------------------------

    def telemetry(self) -> list[NodeRecord]:
        return self.cluster.emit_telemetry(self.now())

    def control(self, verb: str, target: str) -> dict:
        """Node-control entry point used by the operator server's adapter."""
        actions = {
            "reboot": self.cluster.reboot,
            "reimage": self.cluster.reimage,
            "remove_from_scheduler": self.cluster.remove_from_scheduler,
            "return_to_service": self.cluster.return_to_service,
        }
        if verb == "comment":
            if target not in self.cluster.nodes:
                raise UnknownHost(target)
            return {"ok": True, "verb": verb, "target": target}
        if verb not in actions:
            raise FaultError(f"unknown control verb {verb!r}")
        actions[verb](target)
        return {"ok": True, "verb": verb, "target": target}
