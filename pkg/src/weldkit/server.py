"""Live WebSocket service wrapping SessionEngine.

One socket serves one session; messages are JSON text frames (one message
per frame, UTF-8) with a `type` field. Each connection's messages are
handled strictly in arrival order, so the per-session pipeline is
serialized; separate connections hold separate engines and share nothing.
Every inbound message gets exactly one reply (feedback events ride inside
the sample reply, the lesson cursor inside the line summary), so clients
can pipeline frames and match replies positionally. Protocol violations
and rejected inputs get a typed `error` reply and leave the session
exactly as it was. A dropped connection checkpoints the session to the
storage directory.

The message vocabulary is documented field-by-field in docs/protocol.md.
"""

from __future__ import annotations

import itertools
import json
import logging
from pathlib import Path
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .analytics import Condition, StudySequence
from .errors import SchemaError, StorageError, WeldkitError
from .feedback import LessonPlan
from .pose import CalibrationState, TargetRanges
from .session import (
    SessionEngine,
    SessionHeader,
    _dec_enum,
    _dec_frame,
    _dec_line_spec,
    _dec_obj,
    _dec_str,
    _dec_vec,
    _enc_calibration,
    _enc_drift,
    _enc_event,
    _enc_plan,
    _enc_ranges,
    _enc_sample,
    _enc_screening,
    _enc_summary,
    _need,
    persist,
)


_log = logging.getLogger(__name__)


class ProtocolError(WeldkitError):
    """The client sent a message the protocol does not allow here."""


class _Connection:
    """Message handlers for one socket; one engine, strictly serialized."""

    def __init__(self, server: "SessionServer"):
        self.server = server
        self.engine: SessionEngine | None = None
        self.session_id: str | None = None

    def handle(self, text: str) -> list[dict]:
        """Replies for one inbound message; state untouched on error."""
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            return [_error(ProtocolError(f"not valid JSON: {e}"))]
        try:
            msg = _dec_obj(obj, "")
            v, p = _need(msg, "type", "")
            kind = _dec_str(v, p)
            handler = self._HANDLERS.get(kind)
            if handler is None:
                raise ProtocolError(f"unknown message type {kind!r}")
            if kind != "hello" and self.engine is None:
                raise ProtocolError("first message must be hello")
            return handler(self, msg)
        except WeldkitError as e:
            return [_error(e)]

    def _hello(self, msg: dict) -> list[dict]:
        if self.engine is not None:
            raise ProtocolError("session already started")
        v, p = _need(msg, "participant", "")
        participant = _dec_str(v, p)
        v, p = _need(msg, "sequence", "")
        sequence = _dec_enum(StudySequence, v, p)
        v, p = _need(msg, "condition", "")
        condition = _dec_enum(Condition, v, p)
        header = SessionHeader(participant=participant, sequence=sequence, condition=condition)
        self.engine = SessionEngine(
            header,
            self.server.calibration,
            ranges=self.server.ranges,
            plan=self.server.plan,
        )
        self.session_id = f"s{next(self.server._ids)}"
        self.server.registry[self.session_id] = self.engine
        return [
            {
                "type": "welcome",
                "session_id": self.session_id,
                "ranges": _enc_ranges(self.engine.ranges),
                "plan": _enc_plan(self.engine.lesson.plan),
                "calibration": _enc_calibration(self.engine.calibration),
            }
        ]

    def _start_line(self, msg: dict) -> list[dict]:
        spec = msg.get("line_spec")
        if spec is not None:
            spec = _dec_line_spec(spec, "line_spec")
        start = self.engine.start_line(line_spec=spec)
        return [
            {
                "type": "line_started",
                "module": start.module.value,
                "line_index": start.line_index,
                "assisted": start.assisted,
                "tracked": [param.value for param in start.tracked],
            }
        ]

    def _frame(self, msg: dict) -> list[dict]:
        v, p = _need(msg, "frame", "")
        frame = _dec_frame(v, p)
        sample, opened = self.engine.ingest(frame)
        feedback = [_enc_event(e) for e in opened] if self.engine.active_assisted else []
        return [{"type": "sample", "sample": _enc_sample(sample), "feedback": feedback}]

    def _tap(self, msg: dict) -> list[dict]:
        v, p = _need(msg, "frame", "")
        frame = _dec_frame(v, p)
        v, p = _need(msg, "known_point", "")
        point = _dec_vec(v, p, 3)
        calib = self.engine.tap(frame, point)
        return [{"type": "recalibrated", "calibration": _enc_calibration(calib)}]

    def _set_assist(self, msg: dict) -> list[dict]:
        v, p = _need(msg, "assisted", "")
        if v is not None and not isinstance(v, bool):
            raise SchemaError(p, "expected a boolean or null")
        self.engine.set_assist(v)
        return [{"type": "assist", "assisted": v}]

    def _end_line(self, msg: dict) -> list[dict]:
        rec = self.engine.end_line()
        lesson = self.engine.lesson
        return [
            {
                "type": "line_summary",
                "summary": _enc_summary(rec.summary),
                "screening": _enc_screening(rec.screening),
                "drift": _enc_drift(rec.drift),
                "events": [_enc_event(e) for e in rec.events],
                "cursor": {
                    "module_index": lesson.module_index,
                    "line_index": lesson.line_index,
                    "complete": lesson.complete,
                },
            }
        ]

    def _bye(self, msg: dict) -> list[dict]:
        self.finish()
        return [{"type": "bye"}]

    def finish(self) -> None:
        """Checkpoint and persist; used for bye and for dropped connections.

        A persist failure raises with the session intact, so a client
        that got the error reply can retry bye once the disk is fixed.
        """
        if self.engine is None:
            return
        session = self.engine.checkpoint()
        if self.server.storage_dir is not None:
            name = f"{session.header.participant}-{session.header.condition.value}-{self.session_id}.json"
            persist(session, self.server.storage_dir / name)
        self.abandon()

    def abandon(self) -> None:
        """Drop the session without persisting."""
        if self.session_id is not None:
            self.server.registry.pop(self.session_id, None)
        self.engine = None

    _HANDLERS = {
        "hello": _hello,
        "start_line": _start_line,
        "frame": _frame,
        "tap": _tap,
        "set_assist": _set_assist,
        "end_line": _end_line,
        "bye": _bye,
    }


def _error(e: WeldkitError) -> dict:
    out: dict[str, Any] = {"type": "error", "error": type(e).__name__, "detail": str(e)}
    if isinstance(e, SchemaError):
        out["field"] = e.field
    return out


class SessionServer:
    """Shared service state: defaults for new sessions plus the registry."""

    def __init__(
        self,
        storage_dir: str | Path | None = None,
        calibration: CalibrationState | None = None,
        ranges: TargetRanges | None = None,
        plan: LessonPlan | None = None,
    ):
        self.storage_dir = Path(storage_dir) if storage_dir is not None else None
        if self.storage_dir is not None:
            try:
                self.storage_dir.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                raise StorageError(
                    f"could not create storage directory {self.storage_dir}: {e}"
                ) from e
        self.calibration = calibration if calibration is not None else CalibrationState.bench()
        self.ranges = ranges
        self.plan = plan
        self.registry: dict[str, SessionEngine] = {}
        self._ids = itertools.count(1)


def create_app(
    storage_dir: str | Path | None = None,
    calibration: CalibrationState | None = None,
    ranges: TargetRanges | None = None,
    plan: LessonPlan | None = None,
) -> FastAPI:
    server = SessionServer(storage_dir=storage_dir, calibration=calibration, ranges=ranges, plan=plan)
    app = FastAPI(title="weldkit session service")
    app.state.server = server

    @app.websocket("/ws")
    async def ws(socket: WebSocket):
        await socket.accept()
        conn = _Connection(server)
        try:
            while True:
                text = await socket.receive_text()
                for reply in conn.handle(text):
                    await socket.send_text(json.dumps(reply, allow_nan=False))
                    if reply.get("type") == "bye":
                        await socket.close()
                        return
        except WebSocketDisconnect:
            try:
                conn.finish()
            except WeldkitError:
                # Nobody to reply to; keep the service alive for other
                # sockets and surface the lost checkpoint in the log.
                _log.exception("checkpoint failed for session %s", conn.session_id)
                conn.abandon()

    return app


def serve(
    port: int = 8765,
    host: str = "127.0.0.1",
    storage_dir: str | Path | None = None,
    calibration: CalibrationState | None = None,
    ranges: TargetRanges | None = None,
    plan: LessonPlan | None = None,
) -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    app = create_app(storage_dir=storage_dir, calibration=calibration, ranges=ranges, plan=plan)
    uvicorn.run(app, host=host, port=port, log_level="warning")
