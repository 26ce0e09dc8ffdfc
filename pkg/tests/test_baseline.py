"""Deviation engine, classification, hysteresis, and routing."""

import itertools
import json
import random

import pytest

from podwatch.assoc import AssociativeArray
from podwatch.baseline import (
    Alert,
    AlertKind,
    AlertTracker,
    Baseline,
    BaselineEntry,
    CueClass,
    DuplicatePointId,
    JsonlSink,
    NodeColor,
    ParseError,
    Severity,
    VALUE_COL,
    classify,
    classify_missing,
    cue_counts,
    detect_deviations,
    parse_baseline_text,
    route_alert,
)
from podwatch.records import JobAssignment, NodeRecord

from .oracles import (
    color_rule_table,
    random_deviation_case,
    routing_table,
    scalar_deviation_oracle,
)

BASELINE_TEXT = """\
# pointId\tkind\tparam\tseverity\tcueClass\tzone
zone01.temp\tMAX\t32\twarning\tTemperature\tzone01
zone01.humidity\tMAX\t80\twarning\tWater\tzone01
zone01.airflow\tMIN\t500\tinfo\tEconomizer\tzone01
status.fire_alarm\tBINARY\t0\tcritical\tFire\tpod
node-0001\tHOST\tr01/0\tinfo\tNodeHealth\tzone01
node-0002\tHOST\tr01/1\tinfo\tNodeHealth\tzone01
cluster.image\tEXPECT\timg-2.4.1\tinfo\tNodeHealth\tcluster
cluster.mem_red_pct\tPARAM\t95\tcritical\tNodeHealth\tcluster
"""


def frame_of(values: dict[str, float]) -> AssociativeArray:
    return AssociativeArray({(pid, VALUE_COL): v for pid, v in values.items()})


def make_record(scheduled=0, total=32, **kw):
    jobs = (JobAssignment("j1", "alice", scheduled),) if scheduled else ()
    defaults = dict(
        hostname="node-0001",
        timestamp=1700000000,
        image_version="img-2.4.1",
        kernel_version="5.15.0-91",
        cpu_load=scheduled * 0.9,
        mem_used_pct=40.0,
        disk_used_pct=50.0,
        total_cores=total,
        scheduled_cores=scheduled,
        jobs=jobs,
    )
    defaults.update(kw)
    return NodeRecord(**defaults)


# -- loading ------------------------------------------------------------------


def test_load_baseline_entries_and_inventory():
    b = parse_baseline_text(BASELINE_TEXT)
    assert len(b.entries) == 4
    assert b.hosts["node-0002"].slot_index == 1
    assert b.hosts["node-0001"].rack == "r01"
    assert b.expected_image == "img-2.4.1"
    assert b.mem_red_pct == 95.0
    assert b.inventory_ids() >= {"zone01.temp", "node-0001", "node-0002"}
    fire = b.entry_for("status.fire_alarm")
    assert fire.kind is AlertKind.BINARY and fire.severity is Severity.CRITICAL


def test_load_baseline_duplicate_point_id():
    text = "a.b\tMAX\t1\tinfo\tPower\tz\na.b\tMIN\t0\tinfo\tPower\tz\n"
    with pytest.raises(DuplicatePointId) as err:
        parse_baseline_text(text)
    assert err.value.line == 2


def test_load_baseline_parse_errors_name_the_line():
    with pytest.raises(ParseError) as err:
        parse_baseline_text("a.b\tMAX\t1\tinfo\tPower\n")
    assert err.value.line == 1
    with pytest.raises(ParseError):
        parse_baseline_text("a.b\tWHAT\t1\tinfo\tPower\tz\n")
    with pytest.raises(ParseError):
        parse_baseline_text("a.b\tMAX\tnope\tinfo\tPower\tz\n")


# -- deviation detection -----------------------------------------------------


def test_all_inside_limits_is_empty():
    b = parse_baseline_text(BASELINE_TEXT)
    frame = frame_of({"zone01.temp": 25.0, "zone01.humidity": 45.0, "zone01.airflow": 3000.0})
    present = set(frame.rows) | {"status.fire_alarm"}
    assert detect_deviations(frame, b, 100, present) == []


def test_fire_bit_critical_alert():
    b = parse_baseline_text(BASELINE_TEXT)
    frame = frame_of(
        {"zone01.temp": 25.0, "zone01.humidity": 45.0, "zone01.airflow": 3000.0, "status.fire_alarm": 1.0}
    )
    alerts = detect_deviations(frame, b, 100, set(frame.rows))
    assert len(alerts) == 1
    alert = alerts[0]
    assert alert.cue_class is CueClass.FIRE
    assert alert.severity is Severity.CRITICAL
    assert alert.kind is AlertKind.BINARY
    assert alert.observed == 1.0 and alert.limit == 0.0


def test_min_max_and_missing():
    b = parse_baseline_text(BASELINE_TEXT)
    frame = frame_of({"zone01.temp": 33.5, "zone01.airflow": 200.0})
    # humidity and fire never reported this cycle
    alerts = detect_deviations(frame, b, 100, set(frame.rows))
    by_pid = {(a.point_id, a.kind) for a in alerts}
    assert ("zone01.temp", AlertKind.MAX) in by_pid
    assert ("zone01.airflow", AlertKind.MIN) in by_pid
    assert ("zone01.humidity", AlertKind.MISSING) in by_pid
    assert ("status.fire_alarm", AlertKind.MISSING) in by_pid


def test_every_alert_revalidates():
    rng = random.Random(61)
    for _ in range(100):
        frame, present, baseline = random_deviation_case(rng)
        for alert in detect_deviations(frame, baseline, 5, present):
            assert alert.violates(), alert


def test_detection_matches_scalar_oracle():
    rng = random.Random(67)
    for _ in range(300):
        frame, present, baseline = random_deviation_case(rng)
        got = detect_deviations(frame, baseline, 7, present)
        want = scalar_deviation_oracle(frame, baseline, 7, present)
        assert got == want


def test_detection_order_insensitive():
    rng = random.Random(71)
    frame, present, baseline = random_deviation_case(rng)
    shuffled = Baseline(
        entries=list(reversed(baseline.entries)),
        hosts=baseline.hosts,
        expected_image=baseline.expected_image,
    )
    assert detect_deviations(frame, baseline, 1, present) == detect_deviations(
        frame, shuffled, 1, present
    )


def test_cue_counts_aggregation():
    alerts = [
        Alert("a", AlertKind.MAX, 5, 1, Severity.WARNING, CueClass.TEMPERATURE, 1, "zone01"),
        Alert("b", AlertKind.MAX, 5, 1, Severity.WARNING, CueClass.TEMPERATURE, 1, "zone01"),
        Alert("c", AlertKind.BINARY, 1, 0, Severity.CRITICAL, CueClass.FIRE, 1, "pod"),
    ]
    counts = cue_counts(alerts, Baseline())
    assert counts.get("zone01", "Temperature") == 2.0
    assert counts.get("pod", "Fire") == 1.0
    assert counts.nnz == 2


# -- classification ---------------------------------------------------------


def test_classify_examples():
    b = parse_baseline_text(BASELINE_TEXT)
    assert classify(make_record(0), b).color is NodeColor.COLORLESS
    assert classify(make_record(20), b).color is NodeColor.BLUE
    assert classify(make_record(16), b).color is NodeColor.BLUE  # exactly half
    assert classify(make_record(8), b).color is NodeColor.GREEN
    red = classify(make_record(8, image_version="img-9.9.9"), b)
    assert red.color is NodeColor.RED
    assert "image out of sync" in red.reasons


def test_classify_height_scale():
    b = parse_baseline_text(BASELINE_TEXT)
    assert classify(make_record(0, cpu_load=16.0), b).height_scale == 0.5
    assert classify(make_record(0, cpu_load=96.0), b).height_scale == 2.0  # clamped
    assert classify(make_record(0, cpu_load=0.0), b).height_scale == 0.0


def test_classify_exhaustive_rule_table():
    b = parse_baseline_text(BASELINE_TEXT)
    total = 32
    for scheduled, stale, mismatch, mem_high, disk_high in itertools.product(
        range(total + 1), (False, True), (False, True), (False, True), (False, True)
    ):
        record = make_record(
            scheduled,
            total,
            stale=stale,
            image_version="img-X" if mismatch else "img-2.4.1",
            mem_used_pct=97.0 if mem_high else 40.0,
            disk_used_pct=99.0 if disk_high else 50.0,
        )
        want = color_rule_table(scheduled, total, stale, mismatch, mem_high, disk_high)
        got = classify(record, b)
        assert got.color is want, (scheduled, stale, mismatch, mem_high, disk_high)
        # purity: same input, same answer
        assert classify(record, b) == got


def test_classify_red_reasons_are_complete():
    b = parse_baseline_text(BASELINE_TEXT)
    status = classify(
        make_record(4, stale=True, mem_used_pct=99.0, image_version="bad"), b
    )
    assert status.color is NodeColor.RED
    assert set(status.reasons) == {"not responding", "image out of sync", "memory threshold exceeded"}


def test_classify_missing_host():
    status = classify_missing("node-0042")
    assert status.color is NodeColor.RED
    assert status.reasons == ("missing from telemetry",)


# -- hysteresis ----------------------------------------------------------------


def test_tracker_hysteresis_band():
    baseline = Baseline(
        entries=[
            BaselineEntry("p.t", AlertKind.MAX, 100.0, Severity.WARNING, CueClass.TEMPERATURE, "z")
        ]
    )
    tracker = AlertTracker(baseline)

    r1 = tracker.update(frame_of({"p.t": 105.0}), 1)
    assert len(r1.raised) == 1 and len(r1.active) == 1

    # back under the limit but inside the 2% band: stays active
    r2 = tracker.update(frame_of({"p.t": 99.0}), 2)
    assert r2.raised == () and r2.cleared == ()
    assert len(r2.active) == 1
    assert r2.active[0].observed == 105.0  # last violating observation
    assert r2.active[0].timestamp == 1

    # recovered beyond the band: clears
    r3 = tracker.update(frame_of({"p.t": 97.9}), 3)
    assert len(r3.cleared) == 1 and r3.active == ()

    # re-raise afterwards counts as a new alert
    r4 = tracker.update(frame_of({"p.t": 101.0}), 4)
    assert len(r4.raised) == 1
    assert r4.raised[0].timestamp == 4


def test_tracker_binary_clears_immediately():
    baseline = Baseline(
        entries=[BaselineEntry("f.b", AlertKind.BINARY, 0.0, Severity.CRITICAL, CueClass.FIRE, "pod")]
    )
    tracker = AlertTracker(baseline)
    r1 = tracker.update(frame_of({"f.b": 1.0}), 1, {"f.b"})
    assert len(r1.raised) == 1
    r2 = tracker.update(frame_of({}), 2, {"f.b"})
    assert len(r2.cleared) == 1 and r2.active == ()


def test_tracker_observed_updates_while_violating():
    baseline = Baseline(
        entries=[BaselineEntry("p.t", AlertKind.MAX, 10.0, Severity.INFO, CueClass.POWER, "z")]
    )
    tracker = AlertTracker(baseline)
    tracker.update(frame_of({"p.t": 12.0}), 1)
    r2 = tracker.update(frame_of({"p.t": 14.0}), 2)
    assert r2.active[0].observed == 14.0
    assert r2.active[0].timestamp == 1  # raise time preserved


# -- routing ---------------------------------------------------------------------


def make_alert(severity):
    return Alert("feedA.power", AlertKind.MAX, 800.0, 750.0, severity, CueClass.POWER, 42, "pod")


def test_routing_table_cases(tmp_path):
    event_log = JsonlSink(str(tmp_path / "events.jsonl"), "event_log")
    email = JsonlSink(str(tmp_path / "email.jsonl"), "email")

    critical = route_alert(make_alert(Severity.CRITICAL), event_log, email)
    assert [name for name, ok in critical] == ["frame", "event_log", "email"]
    assert all(ok for _name, ok in critical)

    spool = [json.loads(line) for line in (tmp_path / "email.jsonl").read_text().splitlines()]
    assert spool[0]["point_id"] == "feedA.power"
    assert spool[0]["observed"] == 800.0 and spool[0]["limit"] == 750.0

    info = route_alert(make_alert(Severity.INFO), event_log, email)
    assert [name for name, _ok in info] == ["frame"]
    assert len((tmp_path / "email.jsonl").read_text().splitlines()) == 1


def test_routing_matches_table_oracle(tmp_path):
    rng = random.Random(73)
    event_log = JsonlSink(str(tmp_path / "events.jsonl"), "event_log")
    email = JsonlSink(str(tmp_path / "email.jsonl"), "email")
    for _ in range(100):
        severity = rng.choice(list(Severity))
        got = [name for name, _ok in route_alert(make_alert(severity), event_log, email)]
        assert got == routing_table(severity)


def test_routing_sink_failure_never_raises(tmp_path):
    broken = JsonlSink(str(tmp_path / "no-such-dir" / "x.jsonl"), "email")
    deliveries = route_alert(make_alert(Severity.CRITICAL), None, broken)
    assert ("email", False) in deliveries
