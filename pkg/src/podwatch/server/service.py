"""Service runtime: pipeline thread feeding the authoritative server.

`serve` builds one of these: an embedded simulated pod (or remote
endpoints), the four-stage pipeline on a timer, and the FastAPI app all
in a single process, connected by the frame hub.
"""

import logging
import threading
import time
from pathlib import Path
from typing import Optional

from ..baseline import JsonlSink
from ..harness import SimHarness
from ..podsim.sim import ScriptEvent
from .api import ServiceState, create_app
from .core import AuditLog, InProcessAdapter, StateServer, Tier, TokenAuth

log = logging.getLogger(__name__)

DEFAULT_TOKENS = {
    "viewer-token": ("viewer", Tier.VIEWER),
    "operator-token": ("operator", Tier.OPERATOR),
    "admin-token": ("admin", Tier.ADMIN),
}


def write_default_tokens(path: "str | Path") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# token\tprincipal\ttier\n")
        for token, (principal, tier) in DEFAULT_TOKENS.items():
            fh.write(f"{token}\t{principal}\t{tier.name.lower()}\n")


class EmbeddedService:
    """Simulator + pipeline + server in one process."""

    def __init__(
        self,
        store_path: "str | Path" = ":memory:",
        nodes: int = 96,
        racks: int = 12,
        slots_per_rack: int = 8,
        zones: int = 4,
        target_points: Optional[int] = None,
        script: Optional[list[ScriptEvent]] = None,
        seed: int = 7,
        cycle_period: float = 15.0,
        wall_period: Optional[float] = None,
        tokens_path: Optional[str] = None,
        audit_path: Optional[str] = None,
        event_log_path: Optional[str] = None,
        email_spool_path: Optional[str] = None,
        frames_dir: Optional[str] = None,
        start_epoch: int = 1_700_000_000,
    ):
        auth = (
            TokenAuth.from_file(tokens_path)
            if tokens_path
            else TokenAuth(dict(DEFAULT_TOKENS))
        )
        self.audit = AuditLog(audit_path)
        self.harness = SimHarness(
            store_path,
            nodes=nodes,
            racks=racks,
            slots_per_rack=slots_per_rack,
            zones=zones,
            target_points=target_points,
            script=script,
            seed=seed,
            cycle_period=cycle_period,
            start_epoch=start_epoch,
            frames_dir=Path(frames_dir) if frames_dir else None,
            event_log=JsonlSink(event_log_path, "event_log") if event_log_path else None,
            email_spool=JsonlSink(email_spool_path, "email") if email_spool_path else None,
        )
        self.server = StateServer(auth, self.audit, adapter=InProcessAdapter(self.harness.sim))
        self.state = ServiceState(
            server=self.server, store=self.harness.store, baseline=self.harness.baseline
        )
        self.app = create_app(self.state)
        # wall_period controls real pacing; sim time still advances cycle_period
        self.wall_period = cycle_period if wall_period is None else wall_period
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def run_cycle(self) -> None:
        result = self.harness.run_cycle()
        self.server.publish_cycle_threadsafe(result)

    def _loop(self) -> None:
        while not self._stop.is_set():
            started = time.monotonic()
            try:
                self.run_cycle()
            except Exception:
                log.exception("pipeline cycle failed; skipping")
            elapsed = time.monotonic() - started
            self._stop.wait(max(0.0, self.wall_period - elapsed))

    def start_pipeline(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True, name="pipeline")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=10)
        self.harness.close()
