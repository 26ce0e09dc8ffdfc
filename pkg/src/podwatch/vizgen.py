"""Per-cycle visualization frames: deterministic build and canonical bytes.

A frame is the complete semantic render state for one cycle: pod cue
icons, one entity per inventory host, the active alert list, and
headline stats. Equal inputs serialize to byte-identical JSON (sorted
keys, floats at 6 significant digits, newline-terminated), which is what
makes golden-file diffing and exact historical replay possible.
"""

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .assoc import AssociativeArray
from .baseline import (
    Alert,
    AlertKind,
    Baseline,
    CueClass,
    NodeColor,
    NodeStatus,
    Severity,
    VALUE_COL,
    classify_missing,
)
from .records import NodeRecord

FRAME_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PodPointNames:
    """Well-known pointIds the frame builder reads for cues and stats."""

    mechanical_cooling: str = "status.mechanical_cooling"
    economizer: str = "status.economizer"
    facility_power: str = "facility.power"
    power_suffix: str = ".power"


@dataclass(frozen=True)
class PodCue:
    zone: str
    cue: CueClass
    active: bool


@dataclass(frozen=True)
class Entity:
    entity_id: str
    rack: str
    slot_index: int
    color: NodeColor
    height_scale: float
    badges: tuple[str, ...]


@dataclass(frozen=True)
class FrameStats:
    nodes_total: int
    nodes_red: int
    jobs_running: int
    total_kw: float
    pue_ratio: float


@dataclass(frozen=True)
class VizFrame:
    frame_id: int
    timestamp: int
    pod_cues: tuple[PodCue, ...]
    entities: tuple[Entity, ...]
    active_alerts: tuple[Alert, ...]
    stats: FrameStats


def build_frame(
    frame_id: int,
    timestamp: int,
    baseline: Baseline,
    statuses: Mapping[str, NodeStatus],
    records: Mapping[str, NodeRecord],
    values: AssociativeArray,
    active_alerts: Iterable[Alert],
    point_names: PodPointNames = PodPointNames(),
) -> VizFrame:
    """Assemble one frame; every inventory host appears exactly once.

    Hosts missing from `statuses` render Red (absence is actionable,
    not invisible). Rack and slot layout come from the baseline
    inventory, and alerts surface either as pod cues (sensor alerts,
    keyed by zone) or as entity badges (per-host alerts).
    """
    alerts = tuple(sorted(active_alerts, key=lambda a: (a.point_id, a.kind.value)))
    hosts = baseline.hosts

    value_of = lambda pid: values.get(pid, VALUE_COL)

    cue_state: dict[tuple[str, str], bool] = {
        ("pod", CueClass.MECHANICAL_COOLING.value): value_of(point_names.mechanical_cooling) >= 0.5,
        ("pod", CueClass.ECONOMIZER.value): value_of(point_names.economizer) >= 0.5,
    }
    host_badges: dict[str, set[str]] = {}
    for alert in alerts:
        if alert.point_id in hosts:
            host_badges.setdefault(alert.point_id, set()).add(alert.cue_class.value)
        else:
            cue_state[(alert.zone, alert.cue_class.value)] = True
    pod_cues = tuple(
        PodCue(zone, CueClass.parse(cue), active)
        for (zone, cue), active in sorted(cue_state.items())
    )

    entities = []
    nodes_red = 0
    for hostname in sorted(hosts):
        layout = hosts[hostname]
        status = statuses.get(hostname)
        if status is None:
            status = classify_missing(hostname)
        if status.color is NodeColor.RED:
            nodes_red += 1
        badges = set(status.reasons) | host_badges.get(hostname, set())
        entities.append(
            Entity(
                entity_id=hostname,
                rack=layout.rack,
                slot_index=layout.slot_index,
                color=status.color,
                height_scale=status.height_scale,
                badges=tuple(sorted(badges)),
            )
        )

    job_ids = {j.job_id for h, r in records.items() if h in hosts for j in r.jobs}
    feed_kw = sum(
        v
        for pid, col, v in values.triples()
        if col == VALUE_COL and pid.endswith(point_names.power_suffix)
        and pid != point_names.facility_power
    )
    facility_kw = value_of(point_names.facility_power)
    pue = facility_kw / feed_kw if feed_kw > 0 and facility_kw > 0 else 0.0

    return VizFrame(
        frame_id=frame_id,
        timestamp=timestamp,
        pod_cues=pod_cues,
        entities=tuple(entities),
        active_alerts=alerts,
        stats=FrameStats(
            nodes_total=len(hosts),
            nodes_red=nodes_red,
            jobs_running=len(job_ids),
            total_kw=feed_kw,
            pue_ratio=pue,
        ),
    )


# -- canonical serialization ----------------------------------------------


def _sig6(v: float) -> float:
    return float(f"{v:.6g}")


def frame_to_dict(frame: VizFrame) -> dict:
    return {
        "v": FRAME_SCHEMA_VERSION,
        "frame_id": frame.frame_id,
        "timestamp": frame.timestamp,
        "pod_cues": [
            {"zone": c.zone, "cue": c.cue.value, "active": c.active} for c in frame.pod_cues
        ],
        "entities": [
            {
                "id": e.entity_id,
                "rack": e.rack,
                "slot": e.slot_index,
                "color": e.color.value,
                "height": _sig6(e.height_scale),
                "badges": list(e.badges),
            }
            for e in frame.entities
        ],
        "active_alerts": [
            {
                "point_id": a.point_id,
                "kind": a.kind.value,
                "observed": _sig6(a.observed),
                "limit": _sig6(a.limit),
                "severity": a.severity.name.lower(),
                "cue_class": a.cue_class.value,
                "timestamp": a.timestamp,
                "zone": a.zone,
            }
            for a in frame.active_alerts
        ],
        "stats": {
            "nodes_total": frame.stats.nodes_total,
            "nodes_red": frame.stats.nodes_red,
            "jobs_running": frame.stats.jobs_running,
            "total_kw": _sig6(frame.stats.total_kw),
            "pue_ratio": _sig6(frame.stats.pue_ratio),
        },
    }


def serialize_frame(frame: VizFrame) -> bytes:
    """Canonical bytes: sorted keys, compact separators, trailing newline."""
    return (
        json.dumps(frame_to_dict(frame), sort_keys=True, separators=(",", ":")) + "\n"
    ).encode("utf-8")


def frame_from_dict(data: dict) -> VizFrame:
    if data.get("v") != FRAME_SCHEMA_VERSION:
        raise ValueError(f"unsupported frame schema version {data.get('v')!r}")
    return VizFrame(
        frame_id=data["frame_id"],
        timestamp=data["timestamp"],
        pod_cues=tuple(
            PodCue(c["zone"], CueClass.parse(c["cue"]), c["active"]) for c in data["pod_cues"]
        ),
        entities=tuple(
            Entity(
                e["id"], e["rack"], e["slot"], NodeColor(e["color"]), e["height"], tuple(e["badges"])
            )
            for e in data["entities"]
        ),
        active_alerts=tuple(
            Alert(
                a["point_id"],
                AlertKind(a["kind"]),
                a["observed"],
                a["limit"],
                Severity.parse(a["severity"]),
                CueClass.parse(a["cue_class"]),
                a["timestamp"],
                a["zone"],
            )
            for a in data["active_alerts"]
        ),
        stats=FrameStats(
            nodes_total=data["stats"]["nodes_total"],
            nodes_red=data["stats"]["nodes_red"],
            jobs_running=data["stats"]["jobs_running"],
            total_kw=data["stats"]["total_kw"],
            pue_ratio=data["stats"]["pue_ratio"],
        ),
    )


def deserialize_frame(blob: bytes) -> VizFrame:
    return frame_from_dict(json.loads(blob.decode("utf-8")))
