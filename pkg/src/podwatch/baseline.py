"""Baseline loading, deviation detection, node classification, alert routing.

The deviation engine is built on the associative-array algebra:
per-kind scalar comparisons produce the violating point set, and a
point-to-(zone, cue) indicator matrix multiplied against it aggregates
violation counts for the frame-level cue icons.
"""

import enum
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .assoc import AssociativeArray, CompareOp
from .records import NodeRecord

log = logging.getLogger(__name__)

VALUE_COL = "value"


class AlertKind(enum.Enum):
    MIN = "MIN"
    MAX = "MAX"
    BINARY = "BINARY"
    MISSING = "MISSING"


class Severity(enum.IntEnum):
    INFO = 0
    WARNING = 1
    CRITICAL = 2

    @classmethod
    def parse(cls, text: str) -> "Severity":
        return cls[text.upper()]


class CueClass(enum.Enum):
    MECHANICAL_COOLING = "MechanicalCooling"
    ECONOMIZER = "Economizer"
    WATER = "Water"
    POWER = "Power"
    TEMPERATURE = "Temperature"
    FIRE = "Fire"
    NODE_HEALTH = "NodeHealth"

    @classmethod
    def parse(cls, text: str) -> "CueClass":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown cue class {text!r}")


class NodeColor(enum.Enum):
    COLORLESS = "colorless"
    BLUE = "blue"
    GREEN = "green"
    RED = "red"


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicatePointId(ParseError):
    pass


@dataclass(frozen=True)
class BaselineEntry:
    """Expected value or range for one monitored point."""

    point_id: str
    kind: AlertKind
    param: float  # threshold for MIN/MAX, expected 0/1 for BINARY
    severity: Severity
    cue_class: CueClass
    zone: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.param):
            raise ValueError(f"{self.point_id}: non-finite threshold")
        if self.kind is AlertKind.BINARY and self.param not in (0.0, 1.0):
            raise ValueError(f"{self.point_id}: BINARY expects 0 or 1")


@dataclass(frozen=True)
class HostEntry:
    hostname: str
    rack: str
    slot_index: int
    zone: str


@dataclass(frozen=True)
class Alert:
    point_id: str
    kind: AlertKind
    observed: float
    limit: float
    severity: Severity
    cue_class: CueClass
    timestamp: int
    zone: str

    def violates(self) -> bool:
        """Re-check that observed really breaks the limit."""
        if self.kind is AlertKind.MIN:
            return self.observed < self.limit
        if self.kind is AlertKind.MAX:
            return self.observed > self.limit
        return self.observed != self.limit  # BINARY and MISSING(expected 1, observed 0)

    def to_json_dict(self) -> dict:
        return {
            "point_id": self.point_id,
            "kind": self.kind.value,
            "observed": self.observed,
            "limit": self.limit,
            "severity": self.severity.name.lower(),
            "cue_class": self.cue_class.value,
            "timestamp": self.timestamp,
            "zone": self.zone,
        }


@dataclass(frozen=True)
class NodeStatus:
    hostname: str
    color: NodeColor
    height_scale: float
    reasons: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "hostname": self.hostname,
            "color": self.color.value,
            "height_scale": self.height_scale,
            "reasons": list(self.reasons),
        }


@dataclass
class Baseline:
    """Inventory, expected configuration, and alert thresholds."""

    entries: list[BaselineEntry] = field(default_factory=list)
    hosts: dict[str, HostEntry] = field(default_factory=dict)
    expected_image: str = ""
    expected_kernel: str = ""
    mem_red_pct: float = 95.0
    disk_red_pct: float = 98.0
    stale_cycles: int = 3
    hysteresis_pct: float = 2.0

    def sensor_inventory(self) -> set[str]:
        return {e.point_id for e in self.entries}

    def inventory_ids(self) -> set[str]:
        return self.sensor_inventory() | set(self.hosts)

    def entry_for(self, point_id: str) -> Optional[BaselineEntry]:
        for e in self.entries:
            if e.point_id == point_id:
                return e
        return None


_EXPECT_FIELDS = {"cluster.image": "expected_image", "cluster.kernel": "expected_kernel"}
_PARAM_FIELDS = {
    "cluster.mem_red_pct": ("mem_red_pct", float),
    "cluster.disk_red_pct": ("disk_red_pct", float),
    "cluster.stale_cycles": ("stale_cycles", int),
    "alert.hysteresis_pct": ("hysteresis_pct", float),
}


def parse_baseline_text(text: str) -> Baseline:
    """Baseline TSV: pointId, kind, param, severity, cueClass, zone.

    Alert kinds are MIN/MAX/BINARY; HOST rows carry inventory layout as
    rack/slot; EXPECT and PARAM rows carry expected configuration.
    """
    baseline = Baseline()
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ParseError(lineno, f"expected 6 fields, got {len(parts)}")
        point_id, kind_s, param, severity_s, cue_s, zone = parts
        if point_id in seen:
            raise DuplicatePointId(lineno, f"duplicate pointId {point_id!r}")
        seen.add(point_id)
        try:
            if kind_s in ("MIN", "MAX", "BINARY"):
                baseline.entries.append(
                    BaselineEntry(
                        point_id,
                        AlertKind(kind_s),
                        float(param),
                        Severity.parse(severity_s),
                        CueClass.parse(cue_s),
                        zone,
                    )
                )
            elif kind_s == "HOST":
                rack, _, slot = param.partition("/")
                baseline.hosts[point_id] = HostEntry(point_id, rack, int(slot), zone)
            elif kind_s == "EXPECT":
                field_name = _EXPECT_FIELDS.get(point_id)
                if field_name is None:
                    raise ValueError(f"unknown EXPECT key {point_id!r}")
                setattr(baseline, field_name, param)
            elif kind_s == "PARAM":
                entry = _PARAM_FIELDS.get(point_id)
                if entry is None:
                    raise ValueError(f"unknown PARAM key {point_id!r}")
                setattr(baseline, entry[0], entry[1](param))
            else:
                raise ValueError(f"unknown kind {kind_s!r}")
        except ParseError:
            raise
        except (ValueError, KeyError) as exc:
            raise ParseError(lineno, str(exc)) from exc
    return baseline


def load_baseline(path: str) -> Baseline:
    with open(path, encoding="utf-8") as fh:
        return parse_baseline_text(fh.read())


# -- deviation detection ------------------------------------------------


def _alert(entry: BaselineEntry, observed: float, timestamp: int) -> Alert:
    return Alert(
        point_id=entry.point_id,
        kind=entry.kind,
        observed=observed,
        limit=entry.param,
        severity=entry.severity,
        cue_class=entry.cue_class,
        timestamp=timestamp,
        zone=entry.zone,
    )


def detect_deviations(
    frame: AssociativeArray,
    baseline: Baseline,
    timestamp: int,
    present: Optional[set[str]] = None,
) -> list[Alert]:
    """One Alert per baseline violation in a point-value frame.

    `frame` holds rows keyed by pointId with a single `value` column;
    zero values are structurally absent per sparse semantics. `present`
    is the set of points that reported this cycle (presence with a zero
    value is not a MIN violation, but full absence of an inventoried
    point raises a MISSING alert).
    """
    if present is None:
        present = set(frame.rows)
    entries = {e.point_id: e for e in baseline.entries}
    by_kind: dict[AlertKind, list[BaselineEntry]] = {}
    for e in baseline.entries:
        by_kind.setdefault(e.kind, []).append(e)

    alerts: list[Alert] = []

    for kind in (AlertKind.MAX, AlertKind.MIN):
        kind_entries = by_kind.get(kind, [])
        if not kind_entries:
            continue
        limits = AssociativeArray(
            {(e.point_id, VALUE_COL): e.param for e in kind_entries}
        )
        sel = frame.subsref({e.point_id for e in kind_entries}, None)
        limits = limits.subsref(set(sel.rows), None)
        if kind is AlertKind.MAX:
            diff = sel.add(limits.scale(-1.0))
        else:
            diff = limits.add(sel.scale(-1.0))
        # threshold rows that are exactly 0 vanish from `limits`, which is
        # numerically identical to comparing against 0
        for pid in diff.compare_scalar(CompareOp.GT, 0.0).rows:
            alerts.append(_alert(entries[pid], sel.get(pid, VALUE_COL), timestamp))

    bin_entries = by_kind.get(AlertKind.BINARY, [])
    if bin_entries:
        expected = AssociativeArray(
            {(e.point_id, VALUE_COL): e.param for e in bin_entries if e.point_id in present}
        )
        sel = frame.subsref({e.point_id for e in bin_entries} & present, None)
        diff = sel.add(expected.scale(-1.0))
        for pid in diff.compare_scalar(CompareOp.NE, 0.0).rows:
            alerts.append(_alert(entries[pid], sel.get(pid, VALUE_COL), timestamp))

    for e in baseline.entries:
        if e.point_id not in present:
            alerts.append(
                Alert(e.point_id, AlertKind.MISSING, 0.0, 1.0, e.severity, e.cue_class, timestamp, e.zone)
            )

    alerts.sort(key=lambda a: (a.point_id, a.kind.value))
    return alerts


def cue_counts(alerts: Iterable[Alert], baseline: Baseline) -> AssociativeArray:
    """Violation counts per (zone, cueClass), via the indicator product.

    Returns an array keyed rows=zone, cols=cue class name. The heavy
    lifting is a multiply of the violating-point indicator against the
    point-to-(zone|cue) membership matrix.
    """
    alerts = list(alerts)
    violations = AssociativeArray(
        {(VALUE_COL, f"{a.kind.value}:{a.point_id}"): 1.0 for a in alerts}
    )
    membership = AssociativeArray(
        {
            (f"{a.kind.value}:{a.point_id}", f"{a.zone}|{a.cue_class.value}"): 1.0
            for a in alerts
        }
    )
    product = violations.multiply(membership)  # 1 x (zone|cue), values = counts
    out: dict[tuple[str, str], float] = {}
    for _row, col, count in product.triples():
        zone, _, cue = col.partition("|")
        out[(zone, cue)] = count
    return AssociativeArray(out)


# -- node classification ----------------------------------------------------


def classify(record: NodeRecord, baseline: Baseline) -> NodeStatus:
    """Color per the status rules; Red dominates everything.

    Blue at or above half the cores scheduled, Green below half but
    nonzero, Colorless idle. Height tracks relative CPU load.
    """
    reasons: list[str] = []
    if record.stale:
        reasons.append("not responding")
    if baseline.expected_image and record.image_version != baseline.expected_image:
        reasons.append("image out of sync")
    if record.mem_used_pct > baseline.mem_red_pct:
        reasons.append("memory threshold exceeded")
    if record.disk_used_pct > baseline.disk_red_pct:
        reasons.append("disk threshold exceeded")

    if record.total_cores <= 0:
        color = NodeColor.RED if reasons else NodeColor.COLORLESS
        return NodeStatus(record.hostname, color, 0.0, tuple(reasons))

    if reasons:
        color = NodeColor.RED
    elif 2 * record.scheduled_cores >= record.total_cores:
        color = NodeColor.BLUE
    elif record.scheduled_cores > 0:
        color = NodeColor.GREEN
    else:
        color = NodeColor.COLORLESS
    height = max(0.0, min(2.0, record.cpu_load / record.total_cores))
    return NodeStatus(record.hostname, color, height, tuple(reasons))


def classify_missing(hostname: str) -> NodeStatus:
    """Inventory host with no telemetry at all renders Red, not invisible."""
    return NodeStatus(hostname, NodeColor.RED, 0.0, ("missing from telemetry",))


# -- alert lifecycle (hysteresis) ----------------------------------------------


@dataclass(frozen=True)
class TrackerResult:
    active: tuple[Alert, ...]
    raised: tuple[Alert, ...]
    cleared: tuple[Alert, ...]


class AlertTracker:
    """Active-alert state with clear hysteresis.

    A MIN/MAX alert clears only once the value re-enters limits by at
    least `hysteresis_pct` of the limit magnitude; BINARY and MISSING
    clear as soon as they stop violating. While a value lingers inside
    the hysteresis band the alert stays active with its last violating
    observation, so every reported alert still re-validates.
    """

    def __init__(self, baseline: Baseline):
        self.baseline = baseline
        self._active: dict[tuple[str, AlertKind], Alert] = {}

    def update(
        self,
        frame: AssociativeArray,
        timestamp: int,
        present: Optional[set[str]] = None,
        extra_alerts: Iterable[Alert] = (),
    ) -> TrackerResult:
        if present is None:
            present = set(frame.rows)
        current = detect_deviations(frame, self.baseline, timestamp, present)
        current.extend(extra_alerts)
        current_keys = {(a.point_id, a.kind) for a in current}
        margin_frac = self.baseline.hysteresis_pct / 100.0

        raised: list[Alert] = []
        for alert in current:
            key = (alert.point_id, alert.kind)
            held = self._active.get(key)
            if held is None:
                self._active[key] = alert
                raised.append(alert)
            else:
                # keep the original raise timestamp, refresh the observation
                self._active[key] = replace(alert, timestamp=held.timestamp)

        cleared: list[Alert] = []
        for key in list(self._active):
            if key in current_keys:
                continue
            held = self._active[key]
            if held.kind in (AlertKind.BINARY, AlertKind.MISSING):
                cleared.append(self._active.pop(key))
                continue
            value = frame.get(held.point_id, VALUE_COL)
            margin = margin_frac * abs(held.limit)
            if held.kind is AlertKind.MAX:
                recovered = value <= held.limit - margin
            else:
                recovered = value >= held.limit + margin
            if recovered:
                cleared.append(self._active.pop(key))

        active = tuple(sorted(self._active.values(), key=lambda a: (a.point_id, a.kind.value)))
        return TrackerResult(active, tuple(raised), tuple(cleared))


# -- routing -------------------------------------------------------------------


class SinkUnavailable(RuntimeError):
    pass


class JsonlSink:
    """Append-only JSONL sink (event log and email spool share the shape)."""

    def __init__(self, path: str, name: str):
        self.path = path
        self.name = name

    def deliver(self, payload: dict) -> None:
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(payload, sort_keys=True) + "\n")
        except OSError as exc:
            raise SinkUnavailable(f"{self.name}: {exc}") from exc


def route_alert(
    alert: Alert,
    event_log: Optional[JsonlSink] = None,
    email_spool: Optional[JsonlSink] = None,
) -> list[tuple[str, bool]]:
    """Severity routing: Info stays on the frame, Warning also hits the
    event log, Critical additionally lands in the email spool.

    Sink failures are logged and reported, never raised: alerting must
    not stall the pipeline.
    """
    deliveries: list[tuple[str, bool]] = [("frame", True)]
    if alert.severity >= Severity.WARNING and event_log is not None:
        deliveries.append((event_log.name, _try_deliver(event_log, alert.to_json_dict())))
    if alert.severity >= Severity.CRITICAL and email_spool is not None:
        message = {
            "timestamp": alert.timestamp,
            "severity": alert.severity.name.lower(),
            "point_id": alert.point_id,
            "observed": alert.observed,
            "limit": alert.limit,
        }
        deliveries.append((email_spool.name, _try_deliver(email_spool, message)))
    return deliveries


def _try_deliver(sink: JsonlSink, payload: dict) -> bool:
    try:
        sink.deliver(payload)
        return True
    except SinkUnavailable as exc:
        log.error("alert sink failed: %s", exc)
        return False
