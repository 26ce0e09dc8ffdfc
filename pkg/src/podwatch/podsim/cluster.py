"""Compute-cluster twin: nodes, static job placement, leak/drift faults.

Job placement is scenario-driven (submit/end events), not a scheduler.
All per-node wiggle comes from a stateless hash of (seed, host, clock),
so identical seeds and scripts reproduce identical telemetry.
"""

import zlib
from dataclasses import dataclass, field

from ..records import JobAssignment, NodeRecord


class UnknownHost(KeyError):
    pass


class UnknownJob(KeyError):
    pass


def _noise(seed: int, tag: str, t: int, span: float) -> float:
    """Deterministic pseudo-noise in [-span, span]."""
    h = zlib.crc32(f"{seed}|{tag}|{t}".encode())
    return (h % 10000 / 10000.0 * 2.0 - 1.0) * span


@dataclass(frozen=True)
class ClusterConfig:
    nodes: int = 900
    racks: int = 44
    slots_per_rack: int = 32
    cores_per_node: int = 32
    image_version: str = "img-2.4.1"
    kernel_version: str = "5.15.0-91"
    seed: int = 7
    zones: tuple[str, ...] = ()
    idle_kw: float = 0.18
    per_core_kw: float = 0.011
    leak_rate_pct_per_s: float = 0.35


@dataclass
class SimNode:
    hostname: str
    rack: str
    slot_index: int
    total_cores: int
    image_version: str
    kernel_version: str
    ip: str
    mac: str
    jobs: list[JobAssignment] = field(default_factory=list)
    mem_used_pct: float = 12.0
    disk_used_pct: float = 40.0
    alive: bool = True
    leaking: bool = False
    unschedulable: bool = False

    @property
    def scheduled_cores(self) -> int:
        return sum(j.cores for j in self.jobs)

    def cpu_load(self, seed: int, t: int) -> float:
        if not self.alive:
            return 0.0
        if self.scheduled_cores == 0:
            return max(0.0, 0.05 + _noise(seed, self.hostname, t, 0.03))
        load = self.scheduled_cores * 0.95 + _noise(seed, self.hostname, t, 0.4)
        return max(0.0, load)

    def power_kw(self, seed: int, t: int, cfg: ClusterConfig) -> float:
        if not self.alive:
            return 0.0
        return cfg.idle_kw + cfg.per_core_kw * self.cpu_load(seed, t)


class ClusterSim:
    """Owns all SimNodes; racks map onto pod zones in contiguous blocks."""

    def __init__(self, config: ClusterConfig):
        self.config = config
        self.nodes: dict[str, SimNode] = {}
        self.job_hosts: dict[str, list[str]] = {}
        rack_count = config.racks
        for i in range(config.nodes):
            rack_idx = i // config.slots_per_rack
            if rack_idx >= rack_count:
                raise ValueError(f"{config.nodes} nodes exceed {rack_count} racks capacity")
            hostname = f"node-{i + 1:04d}"
            self.nodes[hostname] = SimNode(
                hostname=hostname,
                rack=f"r{rack_idx + 1:02d}",
                slot_index=i % config.slots_per_rack,
                total_cores=config.cores_per_node,
                image_version=config.image_version,
                kernel_version=config.kernel_version,
                ip=f"10.30.{i >> 8 & 0xFF}.{i & 0xFF}",
                mac=f"02:4d:4c:{i >> 16 & 0xFF:02x}:{i >> 8 & 0xFF:02x}:{i & 0xFF:02x}",
            )

    # -- layout ----------------------------------------------------------

    def rack_zone(self, rack: str) -> str:
        zones = self.config.zones
        if not zones:
            return ""
        rack_idx = int(rack[1:]) - 1
        return zones[rack_idx * len(zones) // self.config.racks]

    def rack_feed(self, rack: str) -> str:
        return "feedA" if int(rack[1:]) % 2 == 1 else "feedB"

    def hostnames(self) -> list[str]:
        return sorted(self.nodes)

    def _node(self, hostname: str) -> SimNode:
        try:
            return self.nodes[hostname]
        except KeyError:
            raise UnknownHost(hostname) from None

    # -- scenario events ---------------------------------------------------

    def submit_job(self, job_id: str, user: str, node_count: int, cores_per_node: int) -> list[str]:
        """Place a job on the first schedulable nodes with enough free cores."""
        if job_id in self.job_hosts:
            raise ValueError(f"job {job_id!r} already submitted")
        chosen: list[str] = []
        for hostname in self.hostnames():
            node = self.nodes[hostname]
            if not node.alive or node.unschedulable:
                continue
            if node.total_cores - node.scheduled_cores >= cores_per_node:
                chosen.append(hostname)
                if len(chosen) == node_count:
                    break
        if len(chosen) < node_count:
            raise ValueError(f"job {job_id!r} needs {node_count} nodes, only {len(chosen)} free")
        for hostname in chosen:
            self.nodes[hostname].jobs.append(JobAssignment(job_id, user, cores_per_node))
        self.job_hosts[job_id] = chosen
        return chosen

    def end_job(self, job_id: str) -> None:
        hosts = self.job_hosts.pop(job_id, None)
        if hosts is None:
            raise UnknownJob(job_id)
        for hostname in hosts:
            node = self.nodes[hostname]
            node.jobs = [j for j in node.jobs if j.job_id != job_id]
            node.leaking = False

    def inject_memory_leak(self, job_id: str) -> list[str]:
        hosts = self.job_hosts.get(job_id)
        if not hosts:
            raise UnknownJob(job_id)
        for hostname in hosts:
            self.nodes[hostname].leaking = True
        return list(hosts)

    def inject_image_drift(self, hostname: str) -> None:
        node = self._node(hostname)
        node.image_version = node.image_version + "-drift"

    # -- operator actions --------------------------------------------------

    def reboot(self, hostname: str) -> None:
        """Clear jobs and leak state, restore liveness; image is untouched."""
        node = self._node(hostname)
        for job in list(node.jobs):
            hosts = self.job_hosts.get(job.job_id)
            if hosts and hostname in hosts:
                hosts.remove(hostname)
                if not hosts:
                    del self.job_hosts[job.job_id]
        node.jobs = []
        node.leaking = False
        node.alive = True
        node.mem_used_pct = 12.0

    def reimage(self, hostname: str) -> None:
        self.reboot(hostname)
        self._node(hostname).image_version = self.config.image_version

    def remove_from_scheduler(self, hostname: str) -> None:
        self._node(hostname).unschedulable = True

    def return_to_service(self, hostname: str) -> None:
        node = self._node(hostname)
        node.unschedulable = False
        node.alive = True

    # -- dynamics ------------------------------------------------------------

    def step(self, dt: float) -> None:
        rate = self.config.leak_rate_pct_per_s
        for node in self.nodes.values():
            if node.leaking and node.alive:
                node.mem_used_pct = min(100.0, node.mem_used_pct + rate * dt)
                if node.mem_used_pct >= 100.0:
                    node.alive = False  # exhausted: the node stops responding
            elif node.alive:
                target = 12.0 + 55.0 * node.scheduled_cores / node.total_cores
                node.mem_used_pct += (target - node.mem_used_pct) * min(1.0, dt / 120.0)

    def emit_telemetry(self, timestamp: int) -> list[NodeRecord]:
        """One record per responsive node; dead nodes emit nothing."""
        seed = self.config.seed
        out: list[NodeRecord] = []
        for hostname in self.hostnames():
            node = self.nodes[hostname]
            if not node.alive:
                continue
            out.append(
                NodeRecord(
                    hostname=hostname,
                    timestamp=timestamp,
                    image_version=node.image_version,
                    kernel_version=node.kernel_version,
                    cpu_load=round(node.cpu_load(seed, timestamp), 3),
                    mem_used_pct=round(node.mem_used_pct, 3),
                    disk_used_pct=round(node.disk_used_pct + _noise(seed, hostname + "/d", timestamp, 0.5), 3),
                    total_cores=node.total_cores,
                    scheduled_cores=node.scheduled_cores,
                    jobs=tuple(node.jobs),
                    ip=node.ip,
                    mac=node.mac,
                    stale=False,
                )
            )
        return out

    # -- power accounting ------------------------------------------------------

    def node_power_kw(self, timestamp: int) -> dict[str, float]:
        cfg = self.config
        return {h: n.power_kw(cfg.seed, timestamp, cfg) for h, n in self.nodes.items()}

    def feed_it_kw(self, timestamp: int) -> dict[str, float]:
        power = self.node_power_kw(timestamp)
        feeds: dict[str, float] = {"feedA": 0.0, "feedB": 0.0}
        for hostname, kw in power.items():
            feeds[self.rack_feed(self.nodes[hostname].rack)] += kw
        return feeds

    def zone_it_kw(self, timestamp: int) -> dict[str, float]:
        power = self.node_power_kw(timestamp)
        zones: dict[str, float] = {z: 0.0 for z in self.config.zones}
        for hostname, kw in power.items():
            zone = self.rack_zone(self.nodes[hostname].rack)
            if zone:
                zones[zone] += kw
        return zones
