"""Independent brute-force oracles shared by unit and acceptance tests.

These deliberately avoid the associative-array algebra: plain per-point
loops and literal rule tables, so they stay independent of the paths
they check.
"""

import random

from podwatch.assoc import AssociativeArray
from podwatch.baseline import (
    Alert,
    AlertKind,
    Baseline,
    BaselineEntry,
    CueClass,
    NodeColor,
    Severity,
    VALUE_COL,
)


def scalar_deviation_oracle(frame, baseline, timestamp, present):
    """Per-point scalar loop over every baseline entry."""
    alerts = []
    for e in baseline.entries:
        if e.point_id not in present:
            alerts.append(
                Alert(e.point_id, AlertKind.MISSING, 0.0, 1.0, e.severity, e.cue_class, timestamp, e.zone)
            )
            continue
        v = frame.get(e.point_id, VALUE_COL, 0.0)
        violated = False
        if e.kind is AlertKind.MAX:
            violated = v != 0.0 and v > e.param
        elif e.kind is AlertKind.MIN:
            violated = v != 0.0 and v < e.param
        else:  # BINARY: zero-valued points are present with value 0
            violated = v != e.param
        if violated:
            alerts.append(
                Alert(e.point_id, e.kind, v, e.param, e.severity, e.cue_class, timestamp, e.zone)
            )
    alerts.sort(key=lambda a: (a.point_id, a.kind.value))
    return alerts


def random_deviation_case(rng: random.Random, max_points: int = 40):
    """A random (frame, present, baseline) triple with awkward edges:
    absent points, zero values, zero thresholds, boundary equalities."""
    n = rng.randint(3, max_points)
    entries = []
    frame_entries = {}
    present = set()
    for i in range(n):
        pid = f"p{i:03d}.x"
        zone = f"zone{rng.randint(1, 4):02d}"
        severity = rng.choice(list(Severity))
        cue = rng.choice(list(CueClass))
        kind = rng.choice([AlertKind.MIN, AlertKind.MAX, AlertKind.BINARY])
        if kind is AlertKind.BINARY:
            param = float(rng.randint(0, 1))
            if rng.random() < 0.15:
                pass  # point never reported
            else:
                present.add(pid)
                v = float(rng.choice([0, 0, 1, 1, 1, 2]))
                if v != 0:
                    frame_entries[(pid, VALUE_COL)] = v
        else:
            param = 0.0 if rng.random() < 0.1 else round(rng.uniform(-20, 60), 2)
            if rng.random() < 0.1:
                pass
            else:
                present.add(pid)
                roll = rng.random()
                if roll < 0.05:
                    v = 0.0
                elif roll < 0.15:
                    v = param  # boundary: equality must not trigger
                else:
                    v = round(rng.uniform(-30, 90), 2)
                if v != 0:
                    frame_entries[(pid, VALUE_COL)] = v
        entries.append(BaselineEntry(pid, kind, param, severity, cue, zone))
    return AssociativeArray(frame_entries), present, Baseline(entries=entries)


def color_rule_table(scheduled, total, stale, image_mismatch, mem_high, disk_high):
    """Literal restatement of the color rules."""
    if stale or image_mismatch or mem_high or disk_high:
        return NodeColor.RED
    if scheduled * 2 >= total:  # exactly half counts as Blue
        return NodeColor.BLUE
    if scheduled > 0:
        return NodeColor.GREEN
    return NodeColor.COLORLESS


def routing_table(severity):
    """Expected sink names per severity."""
    sinks = ["frame"]
    if severity >= Severity.WARNING:
        sinks.append("event_log")
    if severity >= Severity.CRITICAL:
        sinks.append("email")
    return sinks
