"""Exploded-schema normalization: records to triples and back.

Record keys are `zeropad10(ts)|source|id`, so row keys sort
chronologically. Categorical fields explode into `field|value` columns
with value 1; numeric fields keep their value under a plain column name.
Zero-valued numerics are never emitted (sparse semantics: absence means
zero), which keeps the ingest/query round trip exact.
"""

from .records import JobAssignment, NodeRecord, SensorReading

Triple = tuple[str, str, float]

SENSOR_SOURCE = "ecopod"
NODE_SOURCE = "nodes"


def record_key(timestamp: int, source: str, entity_id: str) -> str:
    if "|" in source or "|" in entity_id:
        raise ValueError(f"'|' not allowed in source or id: {source!r}, {entity_id!r}")
    return f"{int(timestamp):010d}|{source}|{entity_id}"


def split_record_key(key: str) -> tuple[int, str, str]:
    ts, source, entity_id = key.split("|", 2)
    return int(ts), source, entity_id


def reading_to_triples(reading: SensorReading) -> list[Triple]:
    key = record_key(reading.timestamp, reading.source, reading.point_id)
    triples: list[Triple] = [(key, f"unit|{reading.unit}", 1.0)]
    if reading.value != 0:
        triples.append((key, "value", reading.value))
    return triples


def node_to_triples(record: NodeRecord) -> list[Triple]:
    key = record_key(record.timestamp, NODE_SOURCE, record.hostname)
    triples: list[Triple] = [
        (key, f"image|{record.image_version}", 1.0),
        (key, f"kernel|{record.kernel_version}", 1.0),
    ]
    if record.ip:
        triples.append((key, f"ip|{record.ip}", 1.0))
    if record.mac:
        triples.append((key, f"mac|{record.mac}", 1.0))
    if record.stale:
        triples.append((key, "stale|1", 1.0))
    users = set()
    for job in record.jobs:
        triples.append((key, f"job|{job.job_id}", 1.0))
        triples.append((key, f"jobuser|{job.job_id}|{job.user}", 1.0))
        users.add(job.user)
        if job.cores:
            triples.append((key, f"job_cores.{job.job_id}", float(job.cores)))
    for user in sorted(users):
        triples.append((key, f"user|{user}", 1.0))
    for field, value in (
        ("cpu_load", record.cpu_load),
        ("mem_used_pct", record.mem_used_pct),
        ("disk_used_pct", record.disk_used_pct),
        ("total_cores", float(record.total_cores)),
        ("scheduled_cores", float(record.scheduled_cores)),
    ):
        if value != 0:
            triples.append((key, field, value))
    return triples


def to_triples(item: "SensorReading | NodeRecord") -> list[Triple]:
    if isinstance(item, SensorReading):
        return reading_to_triples(item)
    if isinstance(item, NodeRecord):
        return node_to_triples(item)
    raise TypeError(f"cannot normalize {type(item).__name__}")


def is_exploded(col: str) -> bool:
    """Exploded `field|value` columns route to the edge tables."""
    return "|" in col


# -- reconstruction (replay / classification read the store back) --------


def node_from_columns(
    key: str, exploded_cols: list[str], raw: dict[str, float]
) -> NodeRecord:
    """Rebuild a NodeRecord from one record key's stored columns."""
    ts, _source, hostname = split_record_key(key)
    image = kernel = ip = mac = ""
    stale = False
    job_users: dict[str, str] = {}
    for col in exploded_cols:
        field, _, value = col.partition("|")
        if field == "image":
            image = value
        elif field == "kernel":
            kernel = value
        elif field == "ip":
            ip = value
        elif field == "mac":
            mac = value
        elif field == "stale":
            stale = value == "1"
        elif field == "jobuser":
            job_id, _, user = value.partition("|")
            job_users[job_id] = user
    jobs = tuple(
        JobAssignment(job_id, job_users[job_id], int(raw.get(f"job_cores.{job_id}", 0)))
        for job_id in sorted(job_users)
    )
    return NodeRecord(
        hostname=hostname,
        timestamp=ts,
        image_version=image,
        kernel_version=kernel,
        cpu_load=raw.get("cpu_load", 0.0),
        mem_used_pct=raw.get("mem_used_pct", 0.0),
        disk_used_pct=raw.get("disk_used_pct", 0.0),
        total_cores=int(raw.get("total_cores", 0)),
        scheduled_cores=int(raw.get("scheduled_cores", 0)),
        jobs=jobs,
        ip=ip,
        mac=mac,
        stale=stale,
    )


def reading_from_columns(
    key: str, exploded_cols: list[str], raw: dict[str, float]
) -> SensorReading:
    ts, source, point_id = split_record_key(key)
    unit = ""
    for col in exploded_cols:
        field, _, value = col.partition("|")
        if field == "unit":
            unit = value
    return SensorReading(source, point_id, ts, raw.get("value", 0.0), unit)
