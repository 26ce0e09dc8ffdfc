"""Historical analytics over the persisted store.

Replay rebuilds frames from raw triples through the very same correlate
and frame-build path the live pipeline uses; nothing about a frame is
stored, so the store stays the single source of truth and the replayed
bytes prove it. Reports aggregate the exploded job/user columns and the
raw numeric columns with range scans.
"""

import datetime
from dataclasses import dataclass
from typing import Iterator, Optional

from .assoc import AssociativeArray
from .baseline import AlertTracker, Baseline, NodeColor, VALUE_COL
from .pipeline import correlate_cycle, evaluate_nodes
from .records import NodeRecord
from .schema import NODE_SOURCE, SENSOR_SOURCE, node_from_columns, split_record_key
from .store import NoData, TripleStore
from .vizgen import PodPointNames, VizFrame, build_frame, serialize_frame


class WindowOutOfRange(LookupError):
    pass


@dataclass(frozen=True)
class ReplayWindow:
    event_time: int
    before: int = 0
    after: int = 0

    def __post_init__(self) -> None:
        if self.before < 0 or self.after < 0:
            raise ValueError("before and after must be >= 0")

    @property
    def lo(self) -> int:
        return self.event_time - self.before

    @property
    def hi(self) -> int:
        return self.event_time + self.after


# -- cycle reconstruction ----------------------------------------------------


def _cycle_data(
    store: TripleStore, ts: int
) -> tuple[AssociativeArray, set[str], dict[str, NodeRecord]]:
    """Rebuild one cycle's value frame, present set, and node records."""
    prefix = f"{ts:010d}|"
    key_range = (prefix, prefix + "￿")
    raw = store.query_range("raw", key_range)
    edge = store.query_range("edge", key_range)

    raw_by_key: dict[str, dict[str, float]] = {}
    for row, col, val in raw.triples():
        raw_by_key.setdefault(row, {})[col] = val
    edge_by_key: dict[str, list[str]] = {}
    for row, col, _val in edge.triples():
        edge_by_key.setdefault(row, []).append(col)

    values: dict[tuple[str, str], float] = {}
    present: set[str] = set()
    records: dict[str, NodeRecord] = {}
    for key in set(raw_by_key) | set(edge_by_key):
        _ts, source, entity_id = split_record_key(key)
        if source == NODE_SOURCE:
            records[entity_id] = node_from_columns(
                key, edge_by_key.get(key, []), raw_by_key.get(key, {})
            )
        else:
            present.add(entity_id)
            value = raw_by_key.get(key, {}).get(VALUE_COL, 0.0)
            if value != 0:
                values[(entity_id, VALUE_COL)] = value
    return AssociativeArray(values), present, records


def replay(
    store: TripleStore,
    baseline: Baseline,
    window: ReplayWindow,
    point_names: PodPointNames = PodPointNames(),
) -> Iterator[tuple[VizFrame, bytes]]:
    """Frames for every cycle inside the window, in timestamp order.

    The alert tracker carries hysteresis state across cycles, so the
    rebuild walks forward from the first persisted cycle and emits only
    the windowed frames; frame numbering likewise reflects the position
    of each cycle in the full store.
    """
    cycles = store.cycle_timestamps()
    if not cycles:
        raise NoData("store has no cycles")
    in_window = [ts for ts in cycles if window.lo <= ts <= window.hi]
    if not in_window:
        raise WindowOutOfRange(
            f"no cycles in [{window.lo}, {window.hi}]; store covers "
            f"[{cycles[0]}, {cycles[-1]}]"
        )
    tracker = AlertTracker(baseline)
    for index, ts in enumerate(cycles, 1):
        if ts > window.hi:
            break
        values, present, records = _cycle_data(store, ts)
        statuses, tracked = correlate_cycle(values, present, records, baseline, tracker, ts)
        if ts < window.lo:
            continue
        frame = build_frame(
            index, ts, baseline, statuses, records, values, tracked.active, point_names
        )
        yield frame, serialize_frame(frame)


# -- usage reports --------------------------------------------------------------


@dataclass(frozen=True)
class UsageRow:
    bucket: str
    jobs_submitted: int
    core_hours: float
    peak_kw: float


@dataclass(frozen=True)
class UsageReport:
    bucketing: str
    rows: tuple[UsageRow, ...]

    def to_tsv(self) -> str:
        out = ["bucket\tjobs_submitted\tcore_hours\tpeak_kw\n"]
        for r in self.rows:
            out.append(f"{r.bucket}\t{r.jobs_submitted}\t{r.core_hours:.3f}\t{r.peak_kw:.3f}\n")
        return "".join(out)

    def to_json_dict(self) -> dict:
        return {
            "bucketing": self.bucketing,
            "rows": [
                {
                    "bucket": r.bucket,
                    "jobs_submitted": r.jobs_submitted,
                    "core_hours": round(r.core_hours, 6),
                    "peak_kw": round(r.peak_kw, 6),
                }
                for r in self.rows
            ],
        }


_DOW = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")

BUCKETINGS = ("dow", "hour", "user", "rack")


def _utc(ts: int) -> datetime.datetime:
    return datetime.datetime.fromtimestamp(ts, datetime.timezone.utc)


def _time_bucket(bucketing: str, ts: int) -> str:
    if bucketing == "dow":
        return _DOW[_utc(ts).weekday()]
    return f"{_utc(ts).hour:02d}"


def _cycle_durations(cycles: list[int]) -> dict[int, float]:
    """Seconds represented by each cycle (gap to the next one)."""
    if len(cycles) == 1:
        return {cycles[0]: 0.0}
    out = {}
    for a, b in zip(cycles, cycles[1:]):
        out[a] = float(b - a)
    out[cycles[-1]] = float(cycles[-1] - cycles[-2])
    return out


def usage_report(
    store: TripleStore,
    period: tuple[int, int],
    bucketing: str,
    baseline: Optional[Baseline] = None,
) -> UsageReport:
    """Job submissions, core-hours, and peak power per bucket.

    A submission is a job's first appearance inside the period. Power
    is pod-level, so only time bucketings carry a peak_kw.
    """
    if bucketing not in BUCKETINGS:
        raise ValueError(f"bucketing must be one of {BUCKETINGS}")
    lo, hi = period
    cycles = store.cycle_timestamps(lo=lo, hi=hi)
    if not cycles:
        raise NoData(f"no cycles in [{lo}, {hi}]")
    durations = _cycle_durations(cycles)
    col_range = (f"{lo:010d}", f"{hi:010d}￿")

    # job -> (first timestamp, hosts at first sight); jobuser map
    job_first: dict[str, tuple[int, set[str]]] = {}
    activity = store.query_range("edge_t", ("job|", "job|￿"), col_range)
    for row, col, _ in activity.triples():
        job_id = row.split("|", 1)[1]
        ts, _src, host = split_record_key(col)
        seen = job_first.get(job_id)
        if seen is None or ts < seen[0]:
            job_first[job_id] = (ts, {host})
        elif ts == seen[0]:
            seen[1].add(host)
    job_user: dict[str, str] = {}
    for row, _col, _ in store.query_range("edge_t", ("jobuser|", "jobuser|￿"), col_range).triples():
        _field, job_id, user = row.split("|", 2)
        job_user[job_id] = user

    host_rack = {h: e.rack for h, e in (baseline.hosts.items() if baseline else ())}

    submissions: dict[str, int] = {}
    for job_id, (ts, hosts) in job_first.items():
        if bucketing in ("dow", "hour"):
            buckets = [_time_bucket(bucketing, ts)]
        elif bucketing == "user":
            buckets = [job_user.get(job_id, "unknown")]
        else:
            buckets = sorted({host_rack.get(h, "unknown") for h in hosts})
        for b in buckets:
            submissions[b] = submissions.get(b, 0) + 1

    core_hours: dict[str, float] = {}
    if bucketing == "user":
        per_job = store.query_range("raw", col_range, ("job_cores.", "job_cores.￿"))
        for row, col, cores in per_job.triples():
            ts, _src, _host = split_record_key(row)
            job_id = col.split(".", 1)[1]
            bucket = job_user.get(job_id, "unknown")
            core_hours[bucket] = core_hours.get(bucket, 0.0) + cores * durations.get(ts, 0.0) / 3600.0
    else:
        scheduled = store.query_range("raw", col_range, ("scheduled_cores", "scheduled_cores"))
        for row, _col, cores in scheduled.triples():
            ts, _src, host = split_record_key(row)
            if bucketing == "rack":
                bucket = host_rack.get(host, "unknown")
            else:
                bucket = _time_bucket(bucketing, ts)
            core_hours[bucket] = core_hours.get(bucket, 0.0) + cores * durations.get(ts, 0.0) / 3600.0

    peak_kw: dict[str, float] = {}
    if bucketing in ("dow", "hour"):
        power = store.query_range("raw", col_range, (VALUE_COL, VALUE_COL))
        per_cycle: dict[int, float] = {}
        for row, _col, val in power.triples():
            ts, source, pid = split_record_key(row)
            if source == SENSOR_SOURCE and pid.endswith(".power") and not pid.startswith("facility"):
                per_cycle[ts] = per_cycle.get(ts, 0.0) + val
        for ts, kw in per_cycle.items():
            bucket = _time_bucket(bucketing, ts)
            peak_kw[bucket] = max(peak_kw.get(bucket, 0.0), kw)

    buckets = sorted(set(submissions) | set(core_hours) | set(peak_kw))
    if bucketing == "dow":
        buckets = [d for d in _DOW if d in buckets]
    rows = tuple(
        UsageRow(b, submissions.get(b, 0), core_hours.get(b, 0.0), peak_kw.get(b, 0.0))
        for b in buckets
    )
    return UsageReport(bucketing, rows)


# -- hot spots ------------------------------------------------------------------


@dataclass(frozen=True)
class HotspotRow:
    rack: str
    zone: str
    mean_temp_delta: float
    peak_temp: float


def hotspot_report(
    store: TripleStore, period: tuple[int, int], baseline: Optional[Baseline] = None
) -> list[HotspotRow]:
    """Zone mean-temperature deviation from the pod-wide mean, descending.

    One row per rack (racks inherit their zone's numbers); zones follow
    the `<zone>.temp` point naming.
    """
    lo, hi = period
    col_range = (f"{lo:010d}", f"{hi:010d}￿")
    temps = store.query_range("raw", col_range, (VALUE_COL, VALUE_COL))
    samples: dict[str, list[float]] = {}
    for row, _col, val in temps.triples():
        _ts, source, pid = split_record_key(row)
        if source != SENSOR_SOURCE or not pid.endswith(".temp"):
            continue
        zone = pid.split(".", 1)[0]
        if not zone.startswith("zone"):
            continue
        samples.setdefault(zone, []).append(val)
    if not samples:
        raise NoData(f"no temperature samples in [{lo}, {hi}]")
    all_values = [v for vs in samples.values() for v in vs]
    pod_mean = sum(all_values) / len(all_values)

    zone_racks: dict[str, list[str]] = {}
    if baseline:
        for entry in baseline.hosts.values():
            zone_racks.setdefault(entry.zone, [])
            if entry.rack not in zone_racks[entry.zone]:
                zone_racks[entry.zone].append(entry.rack)

    rows: list[HotspotRow] = []
    for zone, vs in samples.items():
        delta = sum(vs) / len(vs) - pod_mean
        peak = max(vs)
        racks = sorted(zone_racks.get(zone, [])) or ["-"]
        for rack in racks:
            rows.append(HotspotRow(rack, zone, delta, peak))
    rows.sort(key=lambda r: (-r.mean_temp_delta, r.rack))
    return rows


# -- failures -------------------------------------------------------------------


@dataclass(frozen=True)
class FailureRow:
    component: str
    failure_count: int
    hostnames: tuple[str, ...]


def failure_inventory(
    store: TripleStore, baseline: Baseline, period: tuple[int, int]
) -> list[FailureRow]:
    """Red-transition counts grouped by the first failing check.

    Statuses are reconstructed per cycle from stored records, so the
    inventory reflects exactly what the live classification saw.
    """
    lo, hi = period
    cycles = store.cycle_timestamps(source=NODE_SOURCE, lo=lo, hi=hi)
    if not cycles:
        raise NoData(f"no node cycles in [{lo}, {hi}]")
    was_red: dict[str, bool] = {}
    counts: dict[str, int] = {}
    hosts: dict[str, set[str]] = {}
    for ts in cycles:
        _values, _present, records = _cycle_data(store, ts)
        statuses, _missing = evaluate_nodes(records, baseline, ts)
        for hostname, status in statuses.items():
            red = status.color is NodeColor.RED
            if red and not was_red.get(hostname, False):
                component = status.reasons[0] if status.reasons else "unknown"
                counts[component] = counts.get(component, 0) + 1
                hosts.setdefault(component, set()).add(hostname)
            was_red[hostname] = red
    return [
        FailureRow(component, counts[component], tuple(sorted(hosts[component])))
        for component in sorted(counts, key=lambda c: (-counts[c], c))
    ]
