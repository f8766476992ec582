"""Session logs, the streaming engine, and replay.

A session is one participant sitting: a header, the current calibration,
the lesson cursor, and an ordered list of per-line records (frames in,
samples/events/summary out). Logs are versioned JSON documents written
atomically; loading a log rebuilds an equivalent in-memory session, and
numbers survive the round trip bit-for-bit.

`SessionEngine` runs the same per-line pipeline the batch helpers use
(skill extraction, the shared drift pair predicate, debounced feedback),
one frame at a time. A live service wrapping the engine and an offline
rerun over the same frames therefore produce identical samples and
events. Every mutating call validates its preconditions before touching
state, so a rejected message leaves the session exactly as it was.
"""

from __future__ import annotations

import bisect
import json
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from .analytics import Condition, StudySequence
from .errors import PlanExhaustedError, SchemaError, SequenceError, StorageError
from .feedback import (
    FeedbackEvent,
    FeedbackTracker,
    Hint,
    LessonPlan,
    LessonState,
    LineSummary,
    Module,
    ModulePlan,
    ParamShare,
    RangeState,
    advance,
    default_plan,
    summarize_line,
)
from .integrity import (
    LineDriftReport,
    ScreeningKind,
    ScreeningVerdict,
    detect_drift,
    drift_pair_flag,
    screen_line,
)
from .pose import (
    CalibrationState,
    GridPlane,
    Parameter,
    PoseFrame,
    RigidOffset,
    TargetRanges,
    WeldLineSpec,
    tap_recalibrate,
)
from .skills import SkillExtractor, SkillSample

SCHEMA_VERSION = "1"


# ---------------------------------------------------------------------------
# Session data model


@dataclass(frozen=True)
class SessionHeader:
    """Identity metadata for one participant sitting."""

    participant: str
    sequence: StudySequence
    condition: Condition
    started_at: float = 0.0


@dataclass(frozen=True)
class LineRecord:
    """Everything recorded for one weld line.

    `completed` is False for lines closed by a checkpoint (connection
    dropped mid-line): their data is kept but they do not occupy a lesson
    slot, so resuming repeats the same module/line position.
    """

    module: Module
    line_index: int
    assisted: bool
    tracked: tuple[Parameter, ...]
    calibration: CalibrationState
    line_spec: WeldLineSpec | None
    frames: tuple[PoseFrame, ...]
    samples: tuple[SkillSample, ...]
    events: tuple[FeedbackEvent, ...]
    summary: LineSummary
    screening: ScreeningVerdict
    drift: LineDriftReport
    completed: bool = True


@dataclass(frozen=True)
class Session:
    """Snapshot of one sitting: header, live calibration, cursor, lines."""

    header: SessionHeader
    ranges: TargetRanges
    calibration: CalibrationState
    lesson: LessonState
    lines: tuple[LineRecord, ...]


# ---------------------------------------------------------------------------
# JSON codec
#
# Encoding rules: required float fields may carry NaN, which JSON lacks, so
# non-finite values encode as null and null decodes back to NaN. Fields typed
# float-or-None (speed before warm-up, event offsets, optional frame extras)
# never hold NaN when present, so null unambiguously means None there.
# Vectors are fixed-length lists, enums their value strings. Serialization
# uses sorted keys and compact separators so equal sessions produce equal
# bytes.


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _need(obj: dict, key: str, path: str) -> tuple[Any, str]:
    sub = _join(path, key)
    if key not in obj:
        raise SchemaError(sub, "missing required field")
    return obj[key], sub


def _dec_obj(obj: Any, path: str) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    return obj


def _dec_list(obj: Any, path: str) -> list:
    if not isinstance(obj, list):
        raise SchemaError(path, "expected a list")
    return obj


def _dec_str(obj: Any, path: str) -> str:
    if not isinstance(obj, str):
        raise SchemaError(path, "expected a string")
    return obj


def _dec_bool(obj: Any, path: str) -> bool:
    if not isinstance(obj, bool):
        raise SchemaError(path, "expected a boolean")
    return obj


def _dec_int(obj: Any, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise SchemaError(path, "expected an integer")
    return obj


def _dec_float(obj: Any, path: str) -> float:
    """Required float; null encodes a non-finite value."""
    if obj is None:
        return math.nan
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise SchemaError(path, "expected a number or null")
    return float(obj)


def _dec_opt_float(obj: Any, path: str) -> float | None:
    if obj is None:
        return None
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise SchemaError(path, "expected a number or null")
    return float(obj)


def _dec_enum(enum_cls, obj: Any, path: str):
    name = _dec_str(obj, path)
    try:
        return enum_cls(name)
    except ValueError:
        raise SchemaError(path, f"not a valid {enum_cls.__name__}: {name!r}") from None


def _enc_float(x: float) -> float | None:
    xf = float(x)
    return xf if math.isfinite(xf) else None


def _enc_vec(v: np.ndarray) -> list:
    return [_enc_float(c) for c in np.asarray(v, dtype=float)]


def _dec_vec(obj: Any, path: str, n: int) -> np.ndarray:
    items = _dec_list(obj, path)
    if len(items) != n:
        raise SchemaError(path, f"expected {n} components, got {len(items)}")
    return np.array([_dec_float(c, f"{path}[{i}]") for i, c in enumerate(items)])


def _enc_pair(p: tuple[float, float]) -> list:
    return [float(p[0]), float(p[1])]


def _dec_pair(obj: Any, path: str) -> tuple[float, float]:
    items = _dec_list(obj, path)
    if len(items) != 2:
        raise SchemaError(path, f"expected 2 components, got {len(items)}")
    lo = _dec_float(items[0], f"{path}[0]")
    hi = _dec_float(items[1], f"{path}[1]")
    return (lo, hi)


def _enc_frame(f: PoseFrame) -> dict:
    return {
        "timestamp": _enc_float(f.timestamp),
        "frame_index": int(f.frame_index),
        "position": _enc_vec(f.position),
        "orientation": _enc_vec(f.orientation),
        "trigger_down": bool(f.trigger_down),
        "audio_level": f.audio_level,
        "tracking_confidence": f.tracking_confidence,
    }


def _dec_frame(obj: Any, path: str) -> PoseFrame:
    d = _dec_obj(obj, path)
    v, p = _need(d, "timestamp", path)
    timestamp = _dec_float(v, p)
    v, p = _need(d, "frame_index", path)
    frame_index = _dec_int(v, p)
    v, p = _need(d, "position", path)
    position = _dec_vec(v, p, 3)
    v, p = _need(d, "orientation", path)
    orientation = _dec_vec(v, p, 4)
    v, p = _need(d, "trigger_down", path)
    trigger_down = _dec_bool(v, p)
    audio_level = _dec_opt_float(d.get("audio_level"), _join(path, "audio_level"))
    conf = _dec_opt_float(d.get("tracking_confidence"), _join(path, "tracking_confidence"))
    return PoseFrame(
        timestamp=timestamp,
        frame_index=frame_index,
        position=position,
        orientation=orientation,
        trigger_down=trigger_down,
        audio_level=audio_level,
        tracking_confidence=conf,
    )


def _enc_sample(s: SkillSample) -> dict:
    return {
        "timestamp": _enc_float(s.timestamp),
        "frame_index": int(s.frame_index),
        "ctwd": _enc_float(s.ctwd),
        "travel_angle": _enc_float(s.travel_angle),
        "work_angle": _enc_float(s.work_angle),
        "work_tilt": _enc_float(s.work_tilt),
        "tip_u": _enc_float(s.tip_u),
        "tip_v": _enc_float(s.tip_v),
        "raw_speed": _enc_float(s.raw_speed),
        "kalman_speed": _enc_float(s.kalman_speed),
        "speed": s.speed,
        "speed_signed": s.speed_signed,
        "valid": bool(s.valid),
        "drift_flag": bool(s.drift_flag),
    }


def _dec_sample(obj: Any, path: str) -> SkillSample:
    d = _dec_obj(obj, path)
    vals: dict[str, Any] = {}
    v, p = _need(d, "timestamp", path)
    vals["timestamp"] = _dec_float(v, p)
    v, p = _need(d, "frame_index", path)
    vals["frame_index"] = _dec_int(v, p)
    for name in ("ctwd", "travel_angle", "work_angle", "work_tilt", "tip_u", "tip_v", "raw_speed", "kalman_speed"):
        v, p = _need(d, name, path)
        vals[name] = _dec_float(v, p)
    vals["speed"] = _dec_opt_float(d.get("speed"), _join(path, "speed"))
    vals["speed_signed"] = _dec_opt_float(d.get("speed_signed"), _join(path, "speed_signed"))
    v, p = _need(d, "valid", path)
    vals["valid"] = _dec_bool(v, p)
    v, p = _need(d, "drift_flag", path)
    vals["drift_flag"] = _dec_bool(v, p)
    return SkillSample(**vals)


def _enc_event(e: FeedbackEvent) -> dict:
    return {
        "parameter": e.parameter.value,
        "state": e.state.value,
        "hint": e.hint.value,
        "onset": _enc_float(e.onset),
        "offset": e.offset,
    }


def _dec_event(obj: Any, path: str) -> FeedbackEvent:
    d = _dec_obj(obj, path)
    v, p = _need(d, "parameter", path)
    parameter = _dec_enum(Parameter, v, p)
    v, p = _need(d, "state", path)
    state = _dec_enum(RangeState, v, p)
    v, p = _need(d, "hint", path)
    hint = _dec_enum(Hint, v, p)
    v, p = _need(d, "onset", path)
    onset = _dec_float(v, p)
    offset = _dec_opt_float(d.get("offset"), _join(path, "offset"))
    return FeedbackEvent(parameter=parameter, state=state, hint=hint, onset=onset, offset=offset)


def _enc_summary(s: LineSummary) -> dict:
    return {
        "shares": {
            param.value: {"within_n": sh.within_n, "above_n": sh.above_n, "below_n": sh.below_n}
            for param, sh in s.shares.items()
        },
        "smoothness": s.smoothness,
        "accuracy_mm": s.accuracy_mm,
        "valid_frame_count": int(s.valid_frame_count),
        "excluded": bool(s.excluded),
        "exclusion_reason": s.exclusion_reason,
    }


def _dec_summary(obj: Any, path: str) -> LineSummary:
    d = _dec_obj(obj, path)
    v, p = _need(d, "shares", path)
    shares_obj = _dec_obj(v, p)
    shares: dict[Parameter, ParamShare] = {}
    for key in sorted(shares_obj):
        kp = _join(p, key)
        param = _dec_enum(Parameter, key, kp)
        sd = _dec_obj(shares_obj[key], kp)
        counts = {}
        for name in ("within_n", "above_n", "below_n"):
            cv, cp = _need(sd, name, kp)
            counts[name] = _dec_int(cv, cp)
        shares[param] = ParamShare(**counts)
    smoothness = _dec_opt_float(d.get("smoothness"), _join(path, "smoothness"))
    accuracy = _dec_opt_float(d.get("accuracy_mm"), _join(path, "accuracy_mm"))
    v, p = _need(d, "valid_frame_count", path)
    valid_n = _dec_int(v, p)
    v, p = _need(d, "excluded", path)
    excluded = _dec_bool(v, p)
    reason = d.get("exclusion_reason")
    if reason is not None:
        reason = _dec_str(reason, _join(path, "exclusion_reason"))
    return LineSummary(
        shares=shares,
        smoothness=smoothness,
        accuracy_mm=accuracy,
        valid_frame_count=valid_n,
        excluded=excluded,
        exclusion_reason=reason,
    )


def _enc_screening(s: ScreeningVerdict) -> dict:
    return {"kind": s.kind.value, "detail": s.detail}


def _dec_screening(obj: Any, path: str) -> ScreeningVerdict:
    d = _dec_obj(obj, path)
    v, p = _need(d, "kind", path)
    kind = _dec_enum(ScreeningKind, v, p)
    v, p = _need(d, "detail", path)
    detail = _dec_str(v, p)
    return ScreeningVerdict(kind=kind, detail=detail)


def _enc_drift(r: LineDriftReport) -> dict:
    return {
        "flagged_indices": list(r.flagged_indices),
        "event_spans": [list(span) for span in r.event_spans],
        "frame_count": int(r.frame_count),
    }


def _dec_drift(obj: Any, path: str) -> LineDriftReport:
    d = _dec_obj(obj, path)
    v, p = _need(d, "flagged_indices", path)
    flagged = tuple(_dec_int(item, f"{p}[{i}]") for i, item in enumerate(_dec_list(v, p)))
    v, p = _need(d, "event_spans", path)
    spans = []
    for i, item in enumerate(_dec_list(v, p)):
        sp = f"{p}[{i}]"
        pair = _dec_list(item, sp)
        if len(pair) != 2:
            raise SchemaError(sp, f"expected 2 components, got {len(pair)}")
        spans.append((_dec_int(pair[0], f"{sp}[0]"), _dec_int(pair[1], f"{sp}[1]")))
    v, p = _need(d, "frame_count", path)
    frame_count = _dec_int(v, p)
    return LineDriftReport(flagged_indices=flagged, event_spans=tuple(spans), frame_count=frame_count)


def _enc_line_spec(spec: WeldLineSpec) -> dict:
    return {
        "start_point": _enc_vec(spec.start_point),
        "direction": _enc_vec(spec.direction),
        "length": float(spec.length),
    }


def _dec_line_spec(obj: Any, path: str) -> WeldLineSpec:
    d = _dec_obj(obj, path)
    v, p = _need(d, "start_point", path)
    start = _dec_vec(v, p, 3)
    v, p = _need(d, "direction", path)
    direction = _dec_vec(v, p, 3)
    v, p = _need(d, "length", path)
    length = _dec_float(v, p)
    try:
        return WeldLineSpec(start_point=start, direction=direction, length=length)
    except ValueError as e:
        raise SchemaError(path, str(e)) from None


def _enc_calibration(c: CalibrationState) -> dict:
    return {
        "grid_plane": {"point": _enc_vec(c.grid_plane.point), "normal": _enc_vec(c.grid_plane.normal)},
        "weld_direction": _enc_vec(c.weld_direction),
        "tip_offset": {
            "translation": _enc_vec(c.tip_offset.translation),
            "rotation": _enc_vec(c.tip_offset.rotation),
        },
        "anchor_position": None if c.anchor_position is None else _enc_vec(c.anchor_position),
        "anchor_orientation": None if c.anchor_orientation is None else _enc_vec(c.anchor_orientation),
    }


def _dec_calibration(obj: Any, path: str) -> CalibrationState:
    d = _dec_obj(obj, path)
    v, p = _need(d, "grid_plane", path)
    gp = _dec_obj(v, p)
    v2, p2 = _need(gp, "point", p)
    point = _dec_vec(v2, p2, 3)
    v2, p2 = _need(gp, "normal", p)
    normal = _dec_vec(v2, p2, 3)
    v, p = _need(d, "weld_direction", path)
    weld_direction = _dec_vec(v, p, 3)
    v, p = _need(d, "tip_offset", path)
    to = _dec_obj(v, p)
    v2, p2 = _need(to, "translation", p)
    translation = _dec_vec(v2, p2, 3)
    v2, p2 = _need(to, "rotation", p)
    rotation = _dec_vec(v2, p2, 4)
    anchor_position = d.get("anchor_position")
    if anchor_position is not None:
        anchor_position = _dec_vec(anchor_position, _join(path, "anchor_position"), 3)
    anchor_orientation = d.get("anchor_orientation")
    if anchor_orientation is not None:
        anchor_orientation = _dec_vec(anchor_orientation, _join(path, "anchor_orientation"), 4)
    try:
        return CalibrationState(
            grid_plane=GridPlane(point=point, normal=normal),
            weld_direction=weld_direction,
            tip_offset=RigidOffset(translation=translation, rotation=rotation),
            anchor_position=anchor_position,
            anchor_orientation=anchor_orientation,
        )
    except ValueError as e:
        raise SchemaError(path, str(e)) from None


def _enc_ranges(r: TargetRanges) -> dict:
    return {
        "ctwd_mm": _enc_pair(r.ctwd_mm),
        "travel_angle_deg": _enc_pair(r.travel_angle_deg),
        "work_angle_deg": _enc_pair(r.work_angle_deg),
        "speed_ipm": _enc_pair(r.speed_ipm),
    }


def _dec_ranges(obj: Any, path: str) -> TargetRanges:
    d = _dec_obj(obj, path)
    pairs = {}
    for name in ("ctwd_mm", "travel_angle_deg", "work_angle_deg", "speed_ipm"):
        v, p = _need(d, name, path)
        pairs[name] = _dec_pair(v, p)
    try:
        return TargetRanges(**pairs)
    except ValueError as e:
        raise SchemaError(path, str(e)) from None


def _enc_plan(plan: LessonPlan) -> dict:
    return {
        "modules": [
            {
                "module": m.module.value,
                "lines": int(m.lines),
                "assisted": bool(m.assisted),
                "tracked": [param.value for param in m.tracked],
            }
            for m in plan.modules
        ],
        "pass_threshold": float(plan.pass_threshold),
        "retry_factor": float(plan.retry_factor),
    }


def _dec_plan(obj: Any, path: str) -> LessonPlan:
    d = _dec_obj(obj, path)
    v, p = _need(d, "modules", path)
    modules = []
    for i, item in enumerate(_dec_list(v, p)):
        mp = f"{p}[{i}]"
        md = _dec_obj(item, mp)
        v2, p2 = _need(md, "module", mp)
        module = _dec_enum(Module, v2, p2)
        v2, p2 = _need(md, "lines", mp)
        lines = _dec_int(v2, p2)
        v2, p2 = _need(md, "assisted", mp)
        assisted = _dec_bool(v2, p2)
        v2, p2 = _need(md, "tracked", mp)
        tracked = tuple(
            _dec_enum(Parameter, t, f"{p2}[{j}]") for j, t in enumerate(_dec_list(v2, p2))
        )
        try:
            modules.append(ModulePlan(module=module, lines=lines, assisted=assisted, tracked=tracked))
        except ValueError as e:
            raise SchemaError(mp, str(e)) from None
    v, p = _need(d, "pass_threshold", path)
    pass_threshold = _dec_float(v, p)
    v, p = _need(d, "retry_factor", path)
    retry_factor = _dec_float(v, p)
    try:
        return LessonPlan(modules=tuple(modules), pass_threshold=pass_threshold, retry_factor=retry_factor)
    except ValueError as e:
        raise SchemaError(path, str(e)) from None


def _enc_lesson(state: LessonState) -> dict:
    return {
        "plan": _enc_plan(state.plan),
        "module_index": int(state.module_index),
        "line_index": int(state.line_index),
        "extra_lines": list(state.extra_lines),
        "summaries": [[_enc_summary(s) for s in mod] for mod in state.summaries],
        "complete": bool(state.complete),
    }


def _dec_lesson(obj: Any, path: str) -> LessonState:
    d = _dec_obj(obj, path)
    v, p = _need(d, "plan", path)
    plan = _dec_plan(v, p)
    v, p = _need(d, "module_index", path)
    module_index = _dec_int(v, p)
    v, p = _need(d, "line_index", path)
    line_index = _dec_int(v, p)
    v, p = _need(d, "extra_lines", path)
    extra = tuple(_dec_int(item, f"{p}[{i}]") for i, item in enumerate(_dec_list(v, p)))
    v, p = _need(d, "summaries", path)
    summaries = tuple(
        tuple(_dec_summary(s, f"{p}[{i}][{j}]") for j, s in enumerate(_dec_list(mod, f"{p}[{i}]")))
        for i, mod in enumerate(_dec_list(v, p))
    )
    v, p = _need(d, "complete", path)
    complete = _dec_bool(v, p)
    return LessonState(
        plan=plan,
        module_index=module_index,
        line_index=line_index,
        extra_lines=extra,
        summaries=summaries,
        complete=complete,
    )


def _enc_line(rec: LineRecord) -> dict:
    return {
        "module": rec.module.value,
        "line_index": int(rec.line_index),
        "assisted": bool(rec.assisted),
        "tracked": [param.value for param in rec.tracked],
        "calibration": _enc_calibration(rec.calibration),
        "line_spec": None if rec.line_spec is None else _enc_line_spec(rec.line_spec),
        "frames": [_enc_frame(f) for f in rec.frames],
        "samples": [_enc_sample(s) for s in rec.samples],
        "events": [_enc_event(e) for e in rec.events],
        "summary": _enc_summary(rec.summary),
        "screening": _enc_screening(rec.screening),
        "drift": _enc_drift(rec.drift),
        "completed": bool(rec.completed),
    }


def _dec_line(obj: Any, path: str) -> LineRecord:
    d = _dec_obj(obj, path)
    v, p = _need(d, "module", path)
    module = _dec_enum(Module, v, p)
    v, p = _need(d, "line_index", path)
    line_index = _dec_int(v, p)
    v, p = _need(d, "assisted", path)
    assisted = _dec_bool(v, p)
    v, p = _need(d, "tracked", path)
    tracked = tuple(_dec_enum(Parameter, t, f"{p}[{i}]") for i, t in enumerate(_dec_list(v, p)))
    v, p = _need(d, "calibration", path)
    calibration = _dec_calibration(v, p)
    line_spec = d.get("line_spec")
    if line_spec is not None:
        line_spec = _dec_line_spec(line_spec, _join(path, "line_spec"))
    v, p = _need(d, "frames", path)
    frames = tuple(_dec_frame(f, f"{p}[{i}]") for i, f in enumerate(_dec_list(v, p)))
    v, p = _need(d, "samples", path)
    samples = tuple(_dec_sample(s, f"{p}[{i}]") for i, s in enumerate(_dec_list(v, p)))
    v, p = _need(d, "events", path)
    events = tuple(_dec_event(e, f"{p}[{i}]") for i, e in enumerate(_dec_list(v, p)))
    v, p = _need(d, "summary", path)
    summary = _dec_summary(v, p)
    v, p = _need(d, "screening", path)
    screening = _dec_screening(v, p)
    v, p = _need(d, "drift", path)
    drift = _dec_drift(v, p)
    v, p = _need(d, "completed", path)
    completed = _dec_bool(v, p)
    return LineRecord(
        module=module,
        line_index=line_index,
        assisted=assisted,
        tracked=tracked,
        calibration=calibration,
        line_spec=line_spec,
        frames=frames,
        samples=samples,
        events=events,
        summary=summary,
        screening=screening,
        drift=drift,
        completed=completed,
    )


def _enc_header(h: SessionHeader) -> dict:
    return {
        "participant": h.participant,
        "sequence": h.sequence.value,
        "condition": h.condition.value,
        "started_at": _enc_float(h.started_at),
    }


def _dec_header(obj: Any, path: str) -> SessionHeader:
    d = _dec_obj(obj, path)
    v, p = _need(d, "participant", path)
    participant = _dec_str(v, p)
    v, p = _need(d, "sequence", path)
    sequence = _dec_enum(StudySequence, v, p)
    v, p = _need(d, "condition", path)
    condition = _dec_enum(Condition, v, p)
    v, p = _need(d, "started_at", path)
    started_at = _dec_float(v, p)
    return SessionHeader(
        participant=participant, sequence=sequence, condition=condition, started_at=started_at
    )


def session_to_jsonable(session: Session) -> dict:
    """Plain-JSON representation of a session (schema version included)."""
    return {
        "schema": SCHEMA_VERSION,
        "header": _enc_header(session.header),
        "ranges": _enc_ranges(session.ranges),
        "calibration": _enc_calibration(session.calibration),
        "lesson": _enc_lesson(session.lesson),
        "lines": [_enc_line(rec) for rec in session.lines],
    }


def session_from_jsonable(obj: Any) -> Session:
    """Rebuild a session, naming the first invalid field on failure."""
    d = _dec_obj(obj, "")
    v, p = _need(d, "schema", "")
    version = _dec_str(v, p)
    if version != SCHEMA_VERSION:
        raise SchemaError(p, f"unsupported schema version {version!r}")
    v, p = _need(d, "header", "")
    header = _dec_header(v, p)
    v, p = _need(d, "ranges", "")
    ranges = _dec_ranges(v, p)
    v, p = _need(d, "calibration", "")
    calibration = _dec_calibration(v, p)
    v, p = _need(d, "lesson", "")
    lesson = _dec_lesson(v, p)
    v, p = _need(d, "lines", "")
    lines = tuple(_dec_line(item, f"{p}[{i}]") for i, item in enumerate(_dec_list(v, p)))
    return Session(header=header, ranges=ranges, calibration=calibration, lesson=lesson, lines=lines)


def encode_session(session: Session) -> bytes:
    """Canonical byte serialization: sorted keys, compact separators."""
    doc = session_to_jsonable(session)
    return json.dumps(doc, sort_keys=True, allow_nan=False, separators=(",", ":")).encode()


def decode_session(data: bytes | str) -> Session:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SchemaError("", f"not valid UTF-8: {e}") from None
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"not valid JSON: {e}") from None
    return session_from_jsonable(obj)


def persist(session: Session, path: str | os.PathLike) -> Path:
    """Write a session log atomically (write temp, fsync, rename).

    A failure mid-write cleans up the partial temp file and raises
    StorageError; the destination is never left half-written.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    data = encode_session(session)
    try:
        with open(tmp, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as e:
        try:
            tmp.unlink()
        except OSError:
            pass
        raise StorageError(f"could not write session log {path}: {e}") from e
    return path


def load(path: str | os.PathLike) -> Session:
    """Read a session log; SchemaError names the first invalid field."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"could not read session log {path}: {e}") from e
    return decode_session(data)


# ---------------------------------------------------------------------------
# Streaming engine


@dataclass(frozen=True)
class LineStart:
    """Cursor position handed to a client when a line opens."""

    module: Module
    line_index: int
    assisted: bool
    tracked: tuple[Parameter, ...]


class _ActiveLine:
    __slots__ = (
        "module",
        "line_index",
        "assisted",
        "tracked",
        "calibration",
        "line_spec",
        "extractor",
        "tracker",
        "frames",
        "samples",
    )

    def __init__(
        self,
        module: Module,
        line_index: int,
        assisted: bool,
        tracked: tuple[Parameter, ...],
        calibration: CalibrationState,
        line_spec: WeldLineSpec | None,
        ranges: TargetRanges,
    ):
        self.module = module
        self.line_index = line_index
        self.assisted = assisted
        self.tracked = tracked
        self.calibration = calibration
        self.line_spec = line_spec
        self.extractor = SkillExtractor(calibration)
        self.tracker = FeedbackTracker(ranges, parameters=tracked)
        self.frames: list[PoseFrame] = []
        self.samples: list[SkillSample] = []


class SessionEngine:
    """Per-frame pipeline for one live session.

    Frames stream in strictly increasing timestamp/index order; each one
    yields a SkillSample (drift-marked via the shared pair predicate) and
    any feedback events that just opened. Lines open and close against the
    lesson cursor; taps recalibrate between lines. The engine's closed
    lines, cursor, and calibration snapshot into a Session at any time.
    """

    def __init__(
        self,
        header: SessionHeader,
        calibration: CalibrationState,
        ranges: TargetRanges | None = None,
        plan: LessonPlan | None = None,
    ):
        self.header = header
        self.ranges = ranges if ranges is not None else TargetRanges()
        self._calibration = calibration
        self._lesson = LessonState(plan=plan if plan is not None else default_plan())
        self._lines: list[LineRecord] = []
        self._active: _ActiveLine | None = None
        self._assist_override: bool | None = None

    @classmethod
    def from_session(cls, session: Session) -> "SessionEngine":
        """Resume from a checkpoint; any partial line restarts from scratch."""
        eng = cls(session.header, session.calibration, ranges=session.ranges, plan=session.lesson.plan)
        eng._lesson = session.lesson
        eng._lines = list(session.lines)
        return eng

    @property
    def calibration(self) -> CalibrationState:
        return self._calibration

    @property
    def lesson(self) -> LessonState:
        return self._lesson

    @property
    def line_active(self) -> bool:
        return self._active is not None

    @property
    def active_assisted(self) -> bool | None:
        """Assisted flag of the active line, or None when no line is open."""
        return self._active.assisted if self._active is not None else None

    @property
    def lines(self) -> tuple[LineRecord, ...]:
        return tuple(self._lines)

    def session(self) -> Session:
        """Snapshot of all closed lines plus the current cursor."""
        return Session(
            header=self.header,
            ranges=self.ranges,
            calibration=self._calibration,
            lesson=self._lesson,
            lines=tuple(self._lines),
        )

    def set_assist(self, assisted: bool | None) -> None:
        """Override the plan's assisted flag for upcoming lines (None resets)."""
        if self._active is not None:
            raise SequenceError("assist can only be toggled between lines")
        self._assist_override = assisted

    def tap(self, tap_frame: PoseFrame, known_tap_point) -> CalibrationState:
        """Tap-recalibrate between lines; an implausible tap changes nothing."""
        if self._active is not None:
            raise SequenceError("recalibration is only allowed between lines")
        self._calibration = tap_recalibrate(tap_frame, known_tap_point, self._calibration)
        return self._calibration

    def start_line(self, line_spec: WeldLineSpec | None = None) -> LineStart:
        if self._active is not None:
            raise SequenceError("a line is already active")
        if self._lesson.complete:
            raise PlanExhaustedError("lesson already complete")
        module_plan = self._lesson.current_module
        assisted = module_plan.assisted if self._assist_override is None else self._assist_override
        self._active = _ActiveLine(
            module=module_plan.module,
            line_index=self._lesson.line_index,
            assisted=assisted,
            tracked=module_plan.tracked,
            calibration=self._calibration,
            line_spec=line_spec,
            ranges=self.ranges,
        )
        return LineStart(
            module=module_plan.module,
            line_index=self._lesson.line_index,
            assisted=assisted,
            tracked=module_plan.tracked,
        )

    def ingest(self, frame: PoseFrame) -> tuple[SkillSample, tuple[FeedbackEvent, ...]]:
        """Process one frame; rejects out-of-order input before any mutation."""
        line = self._require_active()
        if line.frames:
            last = line.frames[-1]
            if not frame.timestamp > last.timestamp:
                raise SequenceError(
                    f"frame timestamp {frame.timestamp!r} not after {last.timestamp!r}"
                )
            if not frame.frame_index > last.frame_index:
                raise SequenceError(
                    f"frame index {frame.frame_index} not after {last.frame_index}"
                )
        sample = line.extractor.consume(frame)
        if line.samples and drift_pair_flag(
            line.samples[-1], line.frames[-1].orientation, sample, frame.orientation
        ):
            sample = replace(sample, drift_flag=True)
        opened = tuple(line.tracker.consume(sample))
        line.frames.append(frame)
        line.samples.append(sample)
        return sample, opened

    def end_line(self) -> LineRecord:
        """Close the active line, record it, and advance the lesson cursor."""
        rec = self._close_active(completed=True)
        self._lines.append(rec)
        self._lesson = advance(self._lesson, rec.summary)
        return rec

    def abandon_line(self) -> LineRecord:
        """Close the active line without advancing the cursor.

        Used when a connection drops mid-line: the partial data is kept
        (completed=False) and the same module/line position repeats on
        resume.
        """
        rec = self._close_active(completed=False)
        self._lines.append(rec)
        return rec

    def checkpoint(self) -> Session:
        """Snapshot for a dropped connection; closes any in-flight line."""
        if self._active is not None:
            self.abandon_line()
        return self.session()

    def _require_active(self) -> _ActiveLine:
        if self._active is None:
            raise SequenceError("no line is active")
        return self._active

    def _close_active(self, completed: bool) -> LineRecord:
        line = self._require_active()
        samples = tuple(line.samples)
        end_ts = samples[-1].timestamp if samples else None
        events = tuple(line.tracker.finalize(end_ts))
        summary = summarize_line(samples, self.ranges, line_spec=line.line_spec, calib=line.calibration)
        screening = screen_line(samples)
        drift = detect_drift(samples, tuple(f.orientation for f in line.frames))
        rec = LineRecord(
            module=line.module,
            line_index=line.line_index,
            assisted=line.assisted,
            tracked=line.tracked,
            calibration=line.calibration,
            line_spec=line.line_spec,
            frames=tuple(line.frames),
            samples=samples,
            events=events,
            summary=summary,
            screening=screening,
            drift=drift,
            completed=completed,
        )
        self._active = None
        return rec


# ---------------------------------------------------------------------------
# Replay


@dataclass(frozen=True)
class ReplayStep:
    """One replayed frame: original data plus a rescaled playback time."""

    presentation_time: float
    line_ordinal: int
    frame: PoseFrame
    sample: SkillSample
    events: tuple[FeedbackEvent, ...]


def replay(session: Session, speed: float = 1.0) -> Iterator[ReplayStep]:
    """Re-feed every recorded line's frames through a fresh pipeline.

    Derived samples and events come from the original timestamps, so they
    are identical at any speed; `presentation_time` rescales the original
    timeline about its first frame for scheduling playback.
    """
    if not speed > 0:
        raise ValueError("replay speed must be positive")
    t0: float | None = None
    for ordinal, rec in enumerate(session.lines):
        extractor = SkillExtractor(rec.calibration)
        tracker = FeedbackTracker(session.ranges, parameters=rec.tracked)
        prev_frame: PoseFrame | None = None
        prev_sample: SkillSample | None = None
        for f in rec.frames:
            if t0 is None:
                t0 = f.timestamp
            s = extractor.consume(f)
            if prev_sample is not None and drift_pair_flag(
                prev_sample, prev_frame.orientation, s, f.orientation
            ):
                s = replace(s, drift_flag=True)
            opened = tuple(tracker.consume(s))
            prev_frame, prev_sample = f, s
            yield ReplayStep(
                presentation_time=t0 + (f.timestamp - t0) / speed,
                line_ordinal=ordinal,
                frame=f,
                sample=s,
                events=opened,
            )


def rerun(session: Session) -> Session:
    """Rebuild every line record from its stored frames alone.

    The replay determinism check: rerunning a log reproduces its stored
    samples, events, summaries, screening verdicts, and drift reports
    byte-for-byte.
    """
    return replace(session, lines=tuple(_rerun_line(rec, session.ranges) for rec in session.lines))


def _rerun_line(rec: LineRecord, ranges: TargetRanges) -> LineRecord:
    extractor = SkillExtractor(rec.calibration)
    tracker = FeedbackTracker(ranges, parameters=rec.tracked)
    samples: list[SkillSample] = []
    prev_frame: PoseFrame | None = None
    for f in rec.frames:
        s = extractor.consume(f)
        if samples and drift_pair_flag(samples[-1], prev_frame.orientation, s, f.orientation):
            s = replace(s, drift_flag=True)
        tracker.consume(s)
        samples.append(s)
        prev_frame = f
    end_ts = samples[-1].timestamp if samples else None
    events = tuple(tracker.finalize(end_ts))
    summary = summarize_line(samples, ranges, line_spec=rec.line_spec, calib=rec.calibration)
    screening = screen_line(samples)
    drift = detect_drift(samples, tuple(f.orientation for f in rec.frames))
    return replace(
        rec,
        samples=tuple(samples),
        events=events,
        summary=summary,
        screening=screening,
        drift=drift,
    )


# ---------------------------------------------------------------------------
# Audio level files
#
# Audio arrives either embedded in PoseFrames or as a separate level file:
# a JSON document {"schema": "1", "levels": [[timestamp, level], ...]} with
# timestamps in seconds, strictly increasing.


def load_audio_levels(path: str | os.PathLike) -> list[tuple[float, float]]:
    try:
        data = Path(path).read_text()
    except OSError as e:
        raise StorageError(f"could not read audio level file {path}: {e}") from e
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"not valid JSON: {e}") from None
    d = _dec_obj(obj, "")
    v, p = _need(d, "schema", "")
    version = _dec_str(v, p)
    if version != SCHEMA_VERSION:
        raise SchemaError(p, f"unsupported schema version {version!r}")
    v, p = _need(d, "levels", "")
    out: list[tuple[float, float]] = []
    prev_t = -math.inf
    for i, item in enumerate(_dec_list(v, p)):
        ip = f"{p}[{i}]"
        pair = _dec_list(item, ip)
        if len(pair) != 2:
            raise SchemaError(ip, f"expected 2 components, got {len(pair)}")
        t = _dec_float(pair[0], f"{ip}[0]")
        level = _dec_float(pair[1], f"{ip}[1]")
        if not t > prev_t:
            raise SchemaError(f"{ip}[0]", "timestamps must be strictly increasing")
        prev_t = t
        out.append((t, level))
    return out


def attach_audio_levels(
    frames: Sequence[PoseFrame],
    levels: Sequence[tuple[float, float]],
    tolerance_s: float = 1.0 / 180.0,
) -> list[PoseFrame]:
    """Copies of frames with audio_level filled from the nearest level entry.

    A frame keeps audio_level=None when no entry lies within the tolerance
    (default half a nominal frame period).
    """
    times = [t for t, _ in levels]
    out = []
    for f in frames:
        idx = bisect.bisect_left(times, f.timestamp)
        best: float | None = None
        best_dt = tolerance_s
        for j in (idx - 1, idx):
            if 0 <= j < len(times):
                dt = abs(times[j] - f.timestamp)
                if dt <= best_dt:
                    best_dt = dt
                    best = levels[j][1]
        out.append(replace(f, audio_level=best) if best is not None else f)
    return out
