"""FastAPI face of the state server: WebSocket protocol plus REST queries.

The WebSocket endpoint carries the versioned JSON message protocol
(hello/auth_result, server-pushed frame and alert_event, client action,
pull, and replay requests with correlated replies). REST endpoints cover
health, the latest frame, audit, reports, and NDJSON replay streams for
scripting clients.
"""

import asyncio
import json
import logging
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel, Field

from ..baseline import Baseline
from ..history import ReplayWindow, WindowOutOfRange, failure_inventory, hotspot_report, replay, usage_report
from ..store import NoData, TripleStore
from .core import (
    AuthFailed,
    PROTOCOL_VERSION,
    Session,
    StateServer,
    allowed_verbs,
)

log = logging.getLogger(__name__)


@dataclass
class ServiceState:
    server: StateServer
    store: Optional[TripleStore] = None
    baseline: Optional[Baseline] = None


class HealthResponse(BaseModel):
    status: str
    frame_id: int
    clients: int


class ActionRequest(BaseModel):
    token: str
    verb: str
    target: str
    comment: str = ""


class ActionResponse(BaseModel):
    action_id: str
    outcome: str
    reason: str
    audit_id: int


class PullRequest(BaseModel):
    token: str
    kind: str = Field(description="user | job | load_above | status")
    value: str


class PullResponse(BaseModel):
    entities: list[str]
    co_scheduled: list[dict]


class AuditResponse(BaseModel):
    entries: list[dict]


class SessionInfo(BaseModel):
    principal: str
    tier: str
    allowed_verbs: list[str]


def _error(code: str, message: str) -> dict:
    return {"type": "error", "v": PROTOCOL_VERSION, "code": code, "message": message}


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="podwatch", version="0.1.0")
    server = state.server

    def _session_for(token: str) -> Session:
        try:
            return server.authenticate(token)
        except AuthFailed:
            raise HTTPException(status_code=401, detail="invalid token")

    def _require_history() -> tuple[TripleStore, Baseline]:
        if state.store is None or state.baseline is None:
            raise HTTPException(status_code=503, detail="no store attached")
        return state.store, state.baseline

    # -- REST ------------------------------------------------------------

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(
            status="ok",
            frame_id=server.latest_frame_id,
            clients=len(server.hub.session_ids),
        )

    @app.get("/session", response_model=SessionInfo)
    def session_info(x_auth_token: str = Header(default="")) -> SessionInfo:
        session = _session_for(x_auth_token)
        return SessionInfo(
            principal=session.principal,
            tier=session.tier.name.lower(),
            allowed_verbs=sorted(v.value for v in allowed_verbs(session.tier)),
        )

    @app.get("/frames/latest")
    def latest_frame(x_auth_token: str = Header(default="")) -> Response:
        _session_for(x_auth_token)
        if server.latest_frame_bytes is None:
            raise HTTPException(status_code=404, detail="no frame published yet")
        return Response(content=server.latest_frame_bytes, media_type="application/json")

    @app.get("/audit", response_model=AuditResponse)
    def audit(limit: int = Query(default=100, ge=1), x_auth_token: str = Header(default="")) -> AuditResponse:
        _session_for(x_auth_token)
        return AuditResponse(entries=server.audit.entries(limit))

    @app.post("/actions", response_model=ActionResponse)
    def post_action(request: ActionRequest) -> ActionResponse:
        session = _session_for(request.token)
        result = server.handle_action(session, request.verb, request.target, request.comment)
        return ActionResponse(**result.to_json_dict())

    @app.post("/pull", response_model=PullResponse)
    def post_pull(request: PullRequest) -> PullResponse:
        session = _session_for(request.token)
        try:
            result = server.pull(session, request.kind, request.value)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return PullResponse(**result.to_json_dict())

    @app.get("/reports/usage")
    def report_usage(
        start: int,
        end: int,
        bucket: str = "dow",
        x_auth_token: str = Header(default=""),
    ) -> dict:
        _session_for(x_auth_token)
        store, baseline = _require_history()
        try:
            return usage_report(store, (start, end), bucket, baseline).to_json_dict()
        except NoData as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/reports/hotspots")
    def report_hotspots(start: int, end: int, x_auth_token: str = Header(default="")) -> dict:
        _session_for(x_auth_token)
        store, _baseline = _require_history()
        try:
            rows = hotspot_report(store, (start, end), state.baseline)
        except NoData as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "rows": [
                {
                    "rack": r.rack,
                    "zone": r.zone,
                    "mean_temp_delta": round(r.mean_temp_delta, 6),
                    "peak_temp": round(r.peak_temp, 6),
                }
                for r in rows
            ]
        }

    @app.get("/reports/failures")
    def report_failures(start: int, end: int, x_auth_token: str = Header(default="")) -> dict:
        _session_for(x_auth_token)
        store, baseline = _require_history()
        try:
            rows = failure_inventory(store, baseline, (start, end))
        except NoData as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "rows": [
                {
                    "component": r.component,
                    "failure_count": r.failure_count,
                    "hostnames": list(r.hostnames),
                }
                for r in rows
            ]
        }

    @app.get("/replay")
    def replay_stream(
        at: int,
        before: int = 0,
        after: int = 0,
        x_auth_token: str = Header(default=""),
    ) -> StreamingResponse:
        _session_for(x_auth_token)
        store, baseline = _require_history()
        window = ReplayWindow(at, before, after)

        def generate():
            try:
                for _frame, blob in replay(store, baseline, window):
                    yield blob
            except (WindowOutOfRange, NoData) as exc:
                # stream already started; signal in-band
                yield (json.dumps({"error": str(exc)}) + "\n").encode()

        # probe the window before streaming so out-of-range is a clean 404
        cycles = store.cycle_timestamps(lo=window.lo, hi=window.hi)
        if not cycles:
            raise HTTPException(status_code=404, detail="no cycles in window")
        return StreamingResponse(generate(), media_type="application/x-ndjson")

    # -- WebSocket protocol -------------------------------------------------

    @app.websocket("/ws")
    async def protocol(ws: WebSocket) -> None:
        await ws.accept()
        server.hub.bind_loop(asyncio.get_running_loop())
        try:
            hello_raw = await asyncio.wait_for(ws.receive_text(), timeout=15.0)
            hello = json.loads(hello_raw)
        except (asyncio.TimeoutError, json.JSONDecodeError, WebSocketDisconnect):
            await ws.close(code=4400, reason="expected hello")
            return
        if hello.get("type") != "hello":
            await ws.send_text(json.dumps(_error("protocol_violation", "first message must be hello"), sort_keys=True))
            await ws.close(code=4400, reason="protocol violation")
            return
        try:
            session = server.authenticate(str(hello.get("token", "")))
        except AuthFailed as exc:
            await ws.send_text(
                json.dumps(
                    {"type": "auth_result", "v": PROTOCOL_VERSION, "ok": False, "reason": str(exc)},
                    sort_keys=True,
                )
            )
            await ws.close(code=4401, reason="auth failed")
            return
        await ws.send_text(
            json.dumps(
                {
                    "type": "auth_result",
                    "v": PROTOCOL_VERSION,
                    "ok": True,
                    "principal": session.principal,
                    "tier": session.tier.name.lower(),
                    "allowed_verbs": sorted(v.value for v in allowed_verbs(session.tier)),
                },
                sort_keys=True,
            )
        )
        queue = server.hub.subscribe(session.session_id)
        if server.latest_frame_bytes is not None:
            from .core import frame_message

            queue.put_nowait(frame_message(server.latest_frame_bytes))

        async def writer() -> None:
            while True:
                item = await queue.get()
                if item is None:  # dropped as a slow client
                    await ws.close(code=4408, reason="slow client")
                    return
                await ws.send_text(json.dumps(item, sort_keys=True))

        async def reader() -> None:
            while True:
                message = json.loads(await ws.receive_text())
                await _handle_client_message(message, session, queue)

        async def _handle_client_message(message: dict, session: Session, queue: asyncio.Queue) -> None:
            mtype = message.get("type")
            mid = message.get("id")
            if mtype == "action":
                result = await asyncio.to_thread(
                    server.handle_action,
                    session,
                    str(message.get("verb", "")),
                    str(message.get("target", "")),
                    str(message.get("comment", "")),
                )
                await queue.put(
                    {"type": "action_result", "v": PROTOCOL_VERSION, "id": mid, **result.to_json_dict()}
                )
            elif mtype == "pull":
                selector = message.get("selector") or {}
                try:
                    result = server.pull(session, str(selector.get("kind", "")), str(selector.get("value", "")))
                except ValueError as exc:
                    await queue.put({**_error("bad_selector", str(exc)), "id": mid})
                    return
                await queue.put(
                    {"type": "pull_result", "v": PROTOCOL_VERSION, "id": mid, **result.to_json_dict()}
                )
            elif mtype == "replay":
                if state.store is None or state.baseline is None:
                    await queue.put({**_error("no_store", "replay unavailable"), "id": mid})
                    return
                window = ReplayWindow(
                    int(message.get("at", 0)), int(message.get("before", 0)), int(message.get("after", 0))
                )
                try:
                    frames = await asyncio.to_thread(
                        lambda: [blob for _f, blob in replay(state.store, state.baseline, window)]
                    )
                except (WindowOutOfRange, NoData) as exc:
                    await queue.put({**_error("window_out_of_range", str(exc)), "id": mid})
                    return
                for blob in frames:
                    await queue.put(
                        {
                            "type": "frame",
                            "v": PROTOCOL_VERSION,
                            "replay": True,
                            "id": mid,
                            "frame": json.loads(blob),
                        }
                    )
                await queue.put({"type": "replay_done", "v": PROTOCOL_VERSION, "id": mid, "count": len(frames)})
            else:
                raise ProtocolViolation(f"unknown message type {mtype!r}")

        reader_task = asyncio.create_task(reader())
        writer_task = asyncio.create_task(writer())
        try:
            done, pending = await asyncio.wait(
                {reader_task, writer_task}, return_when=asyncio.FIRST_COMPLETED
            )
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if isinstance(exc, ProtocolViolation):
                    await ws.send_text(json.dumps(_error("protocol_violation", str(exc)), sort_keys=True))
                    await ws.close(code=4400, reason="protocol violation")
        except WebSocketDisconnect:
            pass
        finally:
            server.hub.unsubscribe(session.session_id)

    return app


class ProtocolViolation(ValueError):
    pass
