"""Self-contained scripted runs: simulator, TCP endpoints, pipeline, store.

Everything the bench, the golden fixtures, and the end-to-end tests need
in one object. Polling really goes over loopback TCP so the measured
stage timings are honest.
"""

from pathlib import Path
from typing import Optional

from .baseline import Baseline, parse_baseline_text
from .defaults import baseline_for_simulator
from .modbus import ModbusClient, poll_map
from .pipeline import CycleResult, Pipeline
from .podsim import (
    ClusterConfig,
    ModbusTcpServer,
    PodConfig,
    Simulator,
    TelemetryServer,
    build_register_map,
)
from .podsim.servers import collect_telemetry
from .podsim.sim import ScriptEvent
from .store import TripleStore


class SimHarness:
    """Deterministic pipeline run against an in-process simulated pod."""

    def __init__(
        self,
        store_path: "str | Path" = ":memory:",
        nodes: int = 24,
        racks: int = 4,
        slots_per_rack: int = 8,
        cores_per_node: int = 32,
        zones: int = 4,
        target_points: Optional[int] = None,
        script: Optional[list[ScriptEvent]] = None,
        seed: int = 7,
        cycle_period: float = 15.0,
        start_epoch: int = 1_700_000_000,
        baseline_text: Optional[str] = None,
        fast_store: bool = False,
        **pipeline_kwargs,
    ):
        zone_names = tuple(f"zone{i:02d}" for i in range(1, zones + 1))
        register_map = build_register_map(zone_names, target_points=target_points)
        self.sim = Simulator(
            PodConfig(zones=zone_names),
            ClusterConfig(
                nodes=nodes,
                racks=racks,
                slots_per_rack=slots_per_rack,
                cores_per_node=cores_per_node,
                zones=zone_names,
                seed=seed,
            ),
            register_map=register_map,
            script=script,
            start_epoch=start_epoch,
        )
        self.cycle_period = cycle_period
        self.modbus_server = ModbusTcpServer(lambda: self.sim.registers, lambda: self.sim.coils, port=0)
        self.modbus_server.start()
        self.telemetry_server = TelemetryServer(lambda: self.sim.telemetry(), port=0)
        self.telemetry_server.start()
        self.client = ModbusClient("127.0.0.1", self.modbus_server.port)
        self.client.connect()

        text = baseline_text if baseline_text is not None else baseline_for_simulator(self.sim)
        self.baseline: Baseline = parse_baseline_text(text)
        self.baseline_text = text
        self.store = TripleStore(store_path, fast_writes=fast_store)

        def poll_fn(timestamp: int):
            result = poll_map(self.client, self.sim.map, timestamp=timestamp)
            return result.readings, result.failed_points

        def telemetry_fn():
            return collect_telemetry("127.0.0.1", self.telemetry_server.port)

        self.pipeline = Pipeline(self.baseline, self.store, poll_fn, telemetry_fn, **pipeline_kwargs)

    def run_cycle(self) -> CycleResult:
        self.sim.advance(self.cycle_period)
        return self.pipeline.run_cycle(self.sim.now())

    def run_cycles(self, count: int) -> list[CycleResult]:
        return [self.run_cycle() for _ in range(count)]

    def close(self) -> None:
        self.client.close()
        self.modbus_server.stop()
        self.telemetry_server.stop()
        self.store.close()

    def __enter__(self) -> "SimHarness":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
