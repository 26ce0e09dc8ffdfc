"""Digital twin of a containerized pod data center and its compute cluster."""

from .pod import PodConfig, PodSim, PodState
from .cluster import ClusterConfig, ClusterSim, SimNode, UnknownHost
from .sim import (
    FaultError,
    ScriptEvent,
    Simulator,
    build_register_map,
    parse_script,
    parse_script_text,
)
from .servers import BindFailed, ControlServer, ModbusTcpServer, TelemetryServer

__all__ = [
    "BindFailed",
    "ClusterConfig",
    "ClusterSim",
    "ControlServer",
    "FaultError",
    "ModbusTcpServer",
    "PodConfig",
    "PodSim",
    "PodState",
    "ScriptEvent",
    "SimNode",
    "Simulator",
    "TelemetryServer",
    "UnknownHost",
    "build_register_map",
    "parse_script",
    "parse_script_text",
]
