"""Cycle driver for the four pipeline stages: poll, correlate, insert, frame.

The correlate step is shared verbatim with historical replay: both paths
feed the same value-frame and record views into the same tracker and
frame builder, which is what guarantees replayed frames are
byte-identical to the live ones.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .assoc import AssociativeArray
from .baseline import (
    Alert,
    AlertKind,
    AlertTracker,
    Baseline,
    CueClass,
    JsonlSink,
    NodeStatus,
    Severity,
    TrackerResult,
    VALUE_COL,
    classify,
    classify_missing,
    route_alert,
)
from .records import NodeRecord, SensorReading
from .schema import to_triples
from .store import IngestReceipt, TripleStore
from .vizgen import PodPointNames, VizFrame, build_frame, serialize_frame

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageTimings:
    cycle: int
    timestamp: int
    poll: float
    correlate: float
    insert: float
    viz: float

    @property
    def total(self) -> float:
        return self.poll + self.correlate + self.insert + self.viz

    def tsv_line(self) -> str:
        return (
            f"{self.cycle}\t{self.timestamp}\t{self.poll:.4f}\t{self.correlate:.4f}"
            f"\t{self.insert:.4f}\t{self.viz:.4f}\t{self.total:.4f}\n"
        )


@dataclass
class CycleResult:
    frame: VizFrame
    frame_bytes: bytes
    timings: StageTimings
    records: dict[str, NodeRecord]
    statuses: dict[str, NodeStatus]
    tracker: TrackerResult
    receipt: IngestReceipt
    failed_points: list[str] = field(default_factory=list)


def point_frame(readings: list[SensorReading]) -> tuple[AssociativeArray, set[str]]:
    """Value frame (rows=pointId) plus the reporting-point set.

    Zero values vanish from the array but the point still counts as
    present; this matches what the store reconstructs on replay.
    """
    values = AssociativeArray(
        {(r.point_id, VALUE_COL): r.value for r in readings if r.value != 0}
    )
    return values, {r.point_id for r in readings}


def evaluate_nodes(
    records: dict[str, NodeRecord], baseline: Baseline, timestamp: int
) -> tuple[dict[str, NodeStatus], list[Alert]]:
    """Classify every inventory host; absent hosts raise missing-asset alerts."""
    statuses: dict[str, NodeStatus] = {}
    missing: list[Alert] = []
    for hostname, layout in baseline.hosts.items():
        record = records.get(hostname)
        if record is None:
            statuses[hostname] = classify_missing(hostname)
            missing.append(
                Alert(
                    hostname,
                    AlertKind.MISSING,
                    0.0,
                    1.0,
                    Severity.WARNING,
                    CueClass.NODE_HEALTH,
                    timestamp,
                    layout.zone,
                )
            )
        else:
            statuses[hostname] = classify(record, baseline)
    return statuses, missing


def correlate_cycle(
    values: AssociativeArray,
    present: set[str],
    records: dict[str, NodeRecord],
    baseline: Baseline,
    tracker: AlertTracker,
    timestamp: int,
) -> tuple[dict[str, NodeStatus], TrackerResult]:
    """Stage 3 for one cycle; identical for live runs and replay."""
    statuses, missing = evaluate_nodes(records, baseline, timestamp)
    result = tracker.update(values, timestamp, present, extra_alerts=missing)
    return statuses, result


class StalenessTracker:
    """Re-emits last-known records for quiet hosts, flagging them stale
    once they miss the configured number of collection cycles."""

    def __init__(self, baseline: Baseline):
        self.baseline = baseline
        self._last: dict[str, NodeRecord] = {}
        self._missed: dict[str, int] = {}

    def update(self, live: list[NodeRecord], timestamp: int) -> dict[str, NodeRecord]:
        out: dict[str, NodeRecord] = {}
        for record in live:
            self._last[record.hostname] = record
            self._missed[record.hostname] = 0
            out[record.hostname] = record
        for hostname, last in self._last.items():
            if hostname in out:
                continue
            self._missed[hostname] = self._missed.get(hostname, 0) + 1
            out[hostname] = replace(
                last,
                timestamp=timestamp,
                stale=self._missed[hostname] >= self.baseline.stale_cycles,
            )
        return out


class Pipeline:
    """Executes cycles against poll/telemetry callables and a store."""

    def __init__(
        self,
        baseline: Baseline,
        store: TripleStore,
        poll_fn: Callable[[int], tuple[list[SensorReading], list[str]]],
        telemetry_fn: Callable[[], list[NodeRecord]],
        frames_dir: Optional[Path] = None,
        publish: Optional[Callable[[CycleResult], None]] = None,
        event_log: Optional[JsonlSink] = None,
        email_spool: Optional[JsonlSink] = None,
        point_names: PodPointNames = PodPointNames(),
    ):
        self.baseline = baseline
        self.store = store
        self.poll_fn = poll_fn
        self.telemetry_fn = telemetry_fn
        self.frames_dir = Path(frames_dir) if frames_dir else None
        self.publish = publish
        self.event_log = event_log
        self.email_spool = email_spool
        self.point_names = point_names
        self.tracker = AlertTracker(baseline)
        self.staleness = StalenessTracker(baseline)
        # frame numbering continues from whatever the store already holds
        self._cycles_seen = len(store.cycle_timestamps())

    def run_cycle(self, timestamp: int) -> CycleResult:
        t0 = time.monotonic()
        readings, failed_points = self.poll_fn(timestamp)
        live_records = self.telemetry_fn()
        t1 = time.monotonic()

        records = self.staleness.update(live_records, timestamp)
        values, present = point_frame(readings)
        statuses, tracked = correlate_cycle(
            values, present, records, self.baseline, self.tracker, timestamp
        )
        t2 = time.monotonic()

        triples = []
        for reading in readings:
            triples.extend(to_triples(reading))
        for record in records.values():
            triples.extend(to_triples(record))
        receipt = self.store.ingest_batch(triples)
        t3 = time.monotonic()

        self._cycles_seen += 1
        frame = build_frame(
            self._cycles_seen,
            timestamp,
            self.baseline,
            statuses,
            records,
            values,
            tracked.active,
            self.point_names,
        )
        frame_bytes = serialize_frame(frame)
        if self.frames_dir is not None:
            self.frames_dir.mkdir(parents=True, exist_ok=True)
            (self.frames_dir / f"{frame.frame_id}.json").write_bytes(frame_bytes)
        for alert in tracked.raised:
            route_alert(alert, self.event_log, self.email_spool)
        t4 = time.monotonic()

        timings = StageTimings(
            cycle=self._cycles_seen,
            timestamp=timestamp,
            poll=t1 - t0,
            correlate=t2 - t1,
            insert=t3 - t2,
            viz=t4 - t3,
        )
        result = CycleResult(
            frame=frame,
            frame_bytes=frame_bytes,
            timings=timings,
            records=records,
            statuses=statuses,
            tracker=tracked,
            receipt=receipt,
            failed_points=failed_points,
        )
        if self.publish is not None:
            self.publish(result)
        return result
