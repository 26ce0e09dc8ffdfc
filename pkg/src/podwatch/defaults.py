"""Shipped default baseline: alert thresholds, cues, and inventory rows.

The defaults encode the plausible severity mapping (fire/water/power
critical, temperature warnings, cooling-state changes informational) and
derive sensor rows from a register map plus host rows from the cluster
layout, so a freshly generated simulator always has a matching baseline.
"""

from typing import Iterable

from .modbus import RegisterPoint

_SENSOR_RULES = [
    # (suffix, kind, param, severity, cue)
    (".temp", "MAX", "32", "warning", "Temperature"),
    (".humidity", "MAX", "80", "warning", "Water"),
    (".pressure", "MIN", "5", "info", "Economizer"),
    (".airflow", "MIN", "500", "info", "Economizer"),
]

_STATUS_RULES = {
    "status.fire_alarm": ("BINARY", "0", "critical", "Fire"),
    "status.water_alarm": ("BINARY", "0", "critical", "Water"),
    "status.mechanical_cooling": ("BINARY", "0", "info", "MechanicalCooling"),
    "status.economizer": ("BINARY", "0", "info", "Economizer"),
}


def default_baseline_text(
    points: Iterable[RegisterPoint],
    hosts: Iterable[tuple[str, str, int, str]],
    image_version: str,
    kernel_version: str,
    feed_max_kw: float = 750.0,
    aux_max_temp: float = 40.0,
) -> str:
    """Render the default baseline TSV for a register map and host layout.

    `hosts` rows are (hostname, rack, slot_index, zone).
    """
    lines = ["# pointId\tkind\tparam\tseverity\tcueClass\tzone"]
    for p in points:
        if p.point_id in _STATUS_RULES:
            kind, param, sev, cue = _STATUS_RULES[p.point_id]
            lines.append(f"{p.point_id}\t{kind}\t{param}\t{sev}\t{cue}\t{p.zone}")
            continue
        if p.point_id.endswith(".power"):
            if p.point_id.startswith("facility"):
                lines.append(f"{p.point_id}\tMAX\t{feed_max_kw * 4}\tinfo\tPower\t{p.zone}")
            else:
                lines.append(f"{p.point_id}\tMAX\t{feed_max_kw}\tcritical\tPower\t{p.zone}")
            continue
        if p.point_id.startswith("aux."):
            lines.append(f"{p.point_id}\tMAX\t{aux_max_temp}\tinfo\tTemperature\t{p.zone}")
            continue
        for suffix, kind, param, sev, cue in _SENSOR_RULES:
            if p.point_id.endswith(suffix):
                lines.append(f"{p.point_id}\t{kind}\t{param}\t{sev}\t{cue}\t{p.zone}")
                break
    for hostname, rack, slot, zone in hosts:
        lines.append(f"{hostname}\tHOST\t{rack}/{slot}\tinfo\tNodeHealth\t{zone}")
    lines.append(f"cluster.image\tEXPECT\t{image_version}\tinfo\tNodeHealth\tcluster")
    lines.append(f"cluster.kernel\tEXPECT\t{kernel_version}\tinfo\tNodeHealth\tcluster")
    lines.append("cluster.mem_red_pct\tPARAM\t95\tcritical\tNodeHealth\tcluster")
    lines.append("cluster.stale_cycles\tPARAM\t3\tcritical\tNodeHealth\tcluster")
    return "\n".join(lines) + "\n"


def baseline_for_simulator(sim) -> str:
    """Default baseline matching a Simulator's map and cluster layout."""
    hosts = [
        (n.hostname, n.rack, n.slot_index, sim.cluster.rack_zone(n.rack))
        for n in (sim.cluster.nodes[h] for h in sim.cluster.hostnames())
    ]
    return default_baseline_text(
        sim.map,
        hosts,
        sim.cluster.config.image_version,
        sim.cluster.config.kernel_version,
    )
