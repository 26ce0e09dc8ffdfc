"""Authoritative state owner: sessions, tiered actions, audit, frame fan-out.

Clients only ever see what the server distributes; there is no
client-to-client channel. Every action command, including denied and
failed ones, appends exactly one audit entry carrying the target's full
state snapshot at issue time.
"""

import asyncio
import enum
import itertools
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import subprocess

from ..baseline import NodeColor, NodeStatus
from ..pipeline import CycleResult
from ..podsim.servers import send_control
from ..records import NodeRecord

log = logging.getLogger(__name__)


class Tier(enum.IntEnum):
    VIEWER = 0
    OPERATOR = 1
    ADMIN = 2

    @classmethod
    def parse(cls, text: str) -> "Tier":
        return cls[text.upper()]


class Verb(enum.Enum):
    REBOOT = "reboot"
    REIMAGE = "reimage"
    REMOVE_FROM_SCHEDULER = "remove_from_scheduler"
    RETURN_TO_SERVICE = "return_to_service"
    COMMENT = "comment"


# reimage stays admin-only; everything else is operator level
_MIN_TIER = {
    Verb.REBOOT: Tier.OPERATOR,
    Verb.REIMAGE: Tier.ADMIN,
    Verb.REMOVE_FROM_SCHEDULER: Tier.OPERATOR,
    Verb.RETURN_TO_SERVICE: Tier.OPERATOR,
    Verb.COMMENT: Tier.OPERATOR,
}


def allowed_verbs(tier: Tier) -> set[Verb]:
    return {verb for verb, minimum in _MIN_TIER.items() if tier >= minimum}


class AuthFailed(PermissionError):
    pass


class UnknownTarget(KeyError):
    pass


class AdapterFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Session:
    session_id: int
    principal: str
    tier: Tier
    connected_at: int


@dataclass(frozen=True)
class ActionResult:
    action_id: str
    outcome: str  # executed | denied | failed
    reason: str
    audit_id: int

    def to_json_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "outcome": self.outcome,
            "reason": self.reason,
            "audit_id": self.audit_id,
        }


@dataclass(frozen=True)
class PullResult:
    entities: tuple[str, ...]
    co_scheduled: tuple[dict, ...]

    def to_json_dict(self) -> dict:
        return {"entities": list(self.entities), "co_scheduled": list(self.co_scheduled)}


class TokenAuth:
    """Static token table: token -> (principal, tier)."""

    def __init__(self, tokens: dict[str, tuple[str, Tier]]):
        self._tokens = tokens

    @classmethod
    def from_file(cls, path: str) -> "TokenAuth":
        tokens: dict[str, tuple[str, Tier]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                token, principal, tier = line.split("\t")
                tokens[token] = (principal, Tier.parse(tier))
        return cls(tokens)

    def lookup(self, token: str) -> Optional[tuple[str, Tier]]:
        return self._tokens.get(token)


class AuditLog:
    """Append-only JSONL log with a single appender."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._lock = threading.Lock()
        self._entries: list[dict] = []

    def append(self, entry: dict) -> int:
        with self._lock:
            audit_id = len(self._entries) + 1
            entry = {"audit_id": audit_id, **entry}
            self._entries.append(entry)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
            return audit_id

    def entries(self, limit: Optional[int] = None) -> list[dict]:
        with self._lock:
            items = list(self._entries)
        return items if limit is None else items[-limit:]

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


# -- node-control adapters -------------------------------------------------


class InProcessAdapter:
    """Drives an in-process simulator directly."""

    def __init__(self, sim):
        self.sim = sim

    def execute(self, verb: Verb, target: str) -> None:
        from ..podsim.cluster import UnknownHost

        try:
            self.sim.control(verb.value, target)
        except UnknownHost as exc:
            raise UnknownTarget(target) from exc
        except Exception as exc:
            raise AdapterFailure(str(exc)) from exc


class RemoteAdapter:
    """Speaks the simulator's control protocol over TCP."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def execute(self, verb: Verb, target: str) -> None:
        try:
            response = send_control(
                self.host, self.port, {"verb": verb.value, "target": target}, self.timeout
            )
        except OSError as exc:
            raise AdapterFailure(f"control endpoint unreachable: {exc}") from exc
        if not response.get("ok"):
            message = response.get("error", "unknown control failure")
            if "UnknownHost" in message or target in message:
                raise UnknownTarget(target)
            raise AdapterFailure(message)


class ShellAdapter:
    """Shells out to a management command; disabled unless explicitly armed."""

    def __init__(self, command_template: str, enabled: bool = False):
        self.command_template = command_template
        self.enabled = enabled

    def execute(self, verb: Verb, target: str) -> None:
        if not self.enabled:
            raise AdapterFailure("shell adapter is disabled")
        command = self.command_template.format(verb=verb.value, target=target)
        proc = subprocess.run(command, shell=True, capture_output=True, text=True)
        if proc.returncode != 0:
            raise AdapterFailure(f"{command!r} exited {proc.returncode}: {proc.stderr.strip()}")


# -- frame fan-out ------------------------------------------------------------


class FrameHub:
    """Bounded fan-out of server messages to connected sessions.

    Every subscriber sees messages in publish order; a subscriber whose
    buffer overflows is dropped so one slow client can never stall the
    rest.
    """

    def __init__(self, buffer_size: int = 64):
        self.buffer_size = buffer_size
        self._subscribers: dict[int, asyncio.Queue] = {}
        self._dropped: set[int] = set()
        self._loop: Optional[asyncio.AbstractEventLoop] = None

    def bind_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def subscribe(self, session_id: int) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=self.buffer_size)
        self._subscribers[session_id] = queue
        self._dropped.discard(session_id)
        return queue

    def unsubscribe(self, session_id: int) -> None:
        self._subscribers.pop(session_id, None)

    @property
    def session_ids(self) -> list[int]:
        return sorted(self._subscribers)

    def broadcast(self, message: dict) -> dict[int, str]:
        """Queue a message for every subscriber; returns per-session fate."""
        report: dict[int, str] = {}
        for session_id, queue in list(self._subscribers.items()):
            try:
                queue.put_nowait(message)
                report[session_id] = "delivered"
            except asyncio.QueueFull:
                report[session_id] = "dropped"
                self._dropped.add(session_id)
                self._subscribers.pop(session_id, None)
                # flush the stalled buffer and leave a close sentinel
                while True:
                    try:
                        queue.get_nowait()
                    except asyncio.QueueEmpty:
                        break
                queue.put_nowait(None)
        return report

    def was_dropped(self, session_id: int) -> bool:
        return session_id in self._dropped

    def broadcast_threadsafe(self, message: dict) -> None:
        """Publish from outside the event loop (the pipeline thread)."""
        if self._loop is None or self._loop.is_closed():
            return
        self._loop.call_soon_threadsafe(self.broadcast, message)


# -- the authoritative server --------------------------------------------------


class StateServer:
    """Owns canonical state; serializes mutations behind one lock."""

    def __init__(
        self,
        auth: TokenAuth,
        audit: AuditLog,
        adapter: Optional[object] = None,
        hub: Optional[FrameHub] = None,
        clock: Callable[[], int] = lambda: int(time.time()),
    ):
        self.auth = auth
        self.audit = audit
        self.adapter = adapter
        self.hub = hub or FrameHub()
        self.clock = clock
        self._lock = threading.Lock()
        self._session_ids = itertools.count(1)
        self._action_ids = itertools.count(1)
        self.latest_frame_bytes: Optional[bytes] = None
        self.latest_frame_id: int = 0
        self.latest_records: dict[str, NodeRecord] = {}
        self.latest_statuses: dict[str, NodeStatus] = {}

    # -- sessions ------------------------------------------------------

    def authenticate(self, token: str) -> Session:
        found = self.auth.lookup(token)
        if found is None:
            raise AuthFailed("unknown token")
        principal, tier = found
        return Session(next(self._session_ids), principal, tier, self.clock())

    # -- frames --------------------------------------------------------

    def publish_cycle(self, result: CycleResult) -> dict[int, str]:
        """Record the latest canonical state and fan out protocol messages."""
        self._store_latest(result)
        return self._broadcast_cycle(result)

    def publish_cycle_threadsafe(self, result: CycleResult) -> None:
        """Publish from the pipeline thread; broadcasts hop onto the loop."""
        self._store_latest(result)
        if self.hub._loop is not None and not self.hub._loop.is_closed():
            self.hub._loop.call_soon_threadsafe(self._broadcast_cycle, result)

    def _store_latest(self, result: CycleResult) -> None:
        with self._lock:
            self.latest_frame_bytes = result.frame_bytes
            self.latest_frame_id = result.frame.frame_id
            self.latest_records = dict(result.records)
            self.latest_statuses = dict(result.statuses)

    def _broadcast_cycle(self, result: CycleResult) -> dict[int, str]:
        report = self.hub.broadcast(frame_message(result.frame_bytes))
        for alert in result.tracker.raised:
            self.hub.broadcast(alert_message(alert, "raised"))
        for alert in result.tracker.cleared:
            self.hub.broadcast(alert_message(alert, "cleared"))
        return report

    # -- actions ---------------------------------------------------------

    def handle_action(
        self, session: Session, verb_name: str, target: str, comment: str = ""
    ) -> ActionResult:
        action_id = f"a{next(self._action_ids):06d}"
        issued_at = self.clock()
        try:
            verb = Verb(verb_name)
        except ValueError:
            return self._finish_action(
                action_id, session, verb_name, target, comment, issued_at,
                "failed", f"unknown verb {verb_name!r}", None,
            )
        snapshot = self._snapshot(target)
        if verb not in allowed_verbs(session.tier):
            return self._finish_action(
                action_id, session, verb.value, target, comment, issued_at,
                "denied", f"tier {session.tier.name.lower()} may not {verb.value}", snapshot,
            )
        if snapshot is None:
            return self._finish_action(
                action_id, session, verb.value, target, comment, issued_at,
                "failed", "unknown target", None,
            )
        if verb is not Verb.COMMENT:
            if self.adapter is None:
                return self._finish_action(
                    action_id, session, verb.value, target, comment, issued_at,
                    "failed", "no node-control adapter configured", snapshot,
                )
            try:
                self.adapter.execute(verb, target)
            except UnknownTarget:
                return self._finish_action(
                    action_id, session, verb.value, target, comment, issued_at,
                    "failed", "unknown target", snapshot,
                )
            except AdapterFailure as exc:
                return self._finish_action(
                    action_id, session, verb.value, target, comment, issued_at,
                    "failed", str(exc), snapshot,
                )
        return self._finish_action(
            action_id, session, verb.value, target, comment, issued_at, "executed", "", snapshot
        )

    def _snapshot(self, target: str) -> Optional[dict]:
        with self._lock:
            record = self.latest_records.get(target)
            status = self.latest_statuses.get(target)
        if record is None and status is None:
            return None
        return {
            "record": record.to_json_dict() if record else None,
            "status": status.to_json_dict() if status else None,
        }

    def _finish_action(
        self,
        action_id: str,
        session: Session,
        verb: str,
        target: str,
        comment: str,
        issued_at: int,
        outcome: str,
        reason: str,
        snapshot: Optional[dict],
    ) -> ActionResult:
        audit_id = self.audit.append(
            {
                "action_id": action_id,
                "actor": session.principal,
                "tier": session.tier.name.lower(),
                "verb": verb,
                "target": target,
                "comment": comment,
                "node_snapshot": snapshot,
                "outcome": outcome,
                "reason": reason,
                "timestamp": issued_at,
            }
        )
        if outcome != "executed":
            log.info("action %s %s on %s: %s (%s)", action_id, verb, target, outcome, reason)
        return ActionResult(action_id, outcome, reason, audit_id)

    # -- pull queries -------------------------------------------------------

    def pull(self, session: Session, kind: str, value: str) -> PullResult:
        with self._lock:
            records = dict(self.latest_records)
            statuses = dict(self.latest_statuses)

        def jobs_of(host: str):
            record = records.get(host)
            return record.jobs if record else ()

        kind = kind.lower()
        if kind == "user":
            matched = {h for h, r in records.items() if any(j.user == value for j in r.jobs)}
            own = lambda j: j.user == value
        elif kind == "job":
            matched = {h for h, r in records.items() if any(j.job_id == value for j in r.jobs)}
            own = lambda j: j.job_id == value
        elif kind == "load_above":
            threshold = float(value)
            matched = {h for h, r in records.items() if r.cpu_load > threshold}
            own = lambda j: False
        elif kind == "status":
            color = NodeColor(value.lower())
            matched = {h for h, s in statuses.items() if s.color is color}
            own = lambda j: False
        else:
            raise ValueError(f"unknown pull selector {kind!r}")

        co: dict[tuple[str, str], set[str]] = {}
        for host in matched:
            for job in jobs_of(host):
                if not own(job):
                    co.setdefault((job.job_id, job.user), set()).add(host)
        co_scheduled = tuple(
            {"job_id": job_id, "user": user, "hosts": sorted(hosts)}
            for (job_id, user), hosts in sorted(co.items())
        )
        return PullResult(tuple(sorted(matched)), co_scheduled)


# -- protocol message builders ---------------------------------------------------

PROTOCOL_VERSION = 1


def frame_message(frame_bytes: bytes, replay: bool = False) -> dict:
    return {
        "type": "frame",
        "v": PROTOCOL_VERSION,
        "replay": replay,
        "frame": json.loads(frame_bytes),
    }


def alert_message(alert, event: str) -> dict:
    return {
        "type": "alert_event",
        "v": PROTOCOL_VERSION,
        "event": event,
        "alert": alert.to_json_dict(),
    }
