"""Shared record types: one environmental data point, one node snapshot."""

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class SensorReading:
    """One environmental data point from a polled source."""

    source: str
    point_id: str
    timestamp: int
    value: float
    unit: str

    def __post_init__(self) -> None:
        if self.timestamp <= 0:
            raise ValueError(f"{self.point_id}: timestamp must be > 0")
        if not math.isfinite(self.value):
            raise ValueError(f"{self.point_id}: non-finite value {self.value!r}")


@dataclass(frozen=True)
class JobAssignment:
    job_id: str
    user: str
    cores: int


@dataclass(frozen=True)
class NodeRecord:
    """One node's IT and scheduler state at a collection instant."""

    hostname: str
    timestamp: int
    image_version: str
    kernel_version: str
    cpu_load: float
    mem_used_pct: float
    disk_used_pct: float
    total_cores: int
    scheduled_cores: int
    jobs: tuple[JobAssignment, ...] = field(default_factory=tuple)
    ip: str = ""
    mac: str = ""
    stale: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.scheduled_cores <= self.total_cores:
            raise ValueError(
                f"{self.hostname}: scheduled {self.scheduled_cores} outside 0..{self.total_cores}"
            )
        if sum(j.cores for j in self.jobs) != self.scheduled_cores:
            raise ValueError(f"{self.hostname}: job cores do not sum to scheduledCores")
        for pct in (self.mem_used_pct, self.disk_used_pct):
            if not 0 <= pct <= 100:
                raise ValueError(f"{self.hostname}: percentage {pct} outside 0..100")

    def to_json_dict(self) -> dict:
        return {
            "hostname": self.hostname,
            "timestamp": self.timestamp,
            "image_version": self.image_version,
            "kernel_version": self.kernel_version,
            "cpu_load": self.cpu_load,
            "mem_used_pct": self.mem_used_pct,
            "disk_used_pct": self.disk_used_pct,
            "total_cores": self.total_cores,
            "scheduled_cores": self.scheduled_cores,
            "jobs": [{"job_id": j.job_id, "user": j.user, "cores": j.cores} for j in self.jobs],
            "ip": self.ip,
            "mac": self.mac,
            "stale": self.stale,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NodeRecord":
        return cls(
            hostname=data["hostname"],
            timestamp=data["timestamp"],
            image_version=data["image_version"],
            kernel_version=data["kernel_version"],
            cpu_load=data["cpu_load"],
            mem_used_pct=data["mem_used_pct"],
            disk_used_pct=data["disk_used_pct"],
            total_cores=data["total_cores"],
            scheduled_cores=data["scheduled_cores"],
            jobs=tuple(JobAssignment(j["job_id"], j["user"], j["cores"]) for j in data["jobs"]),
            ip=data.get("ip", ""),
            mac=data.get("mac", ""),
            stale=data.get("stale", False),
        )
