"""Config files: target ranges, lesson plans, and trajectory scripts.

All three load from JSON or YAML (picked by file extension) and validate
with the same first-bad-field SchemaError discipline as session logs.
Trajectory scripts describe synthetic weld lines on the bench grid, so
turning one into concrete specs needs a calibration.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .errors import SchemaError, StorageError
from .feedback import LessonPlan
from .pose import CalibrationState, TargetRanges, WeldLineSpec
from .session import (
    _dec_float,
    _dec_int,
    _dec_list,
    _dec_obj,
    _dec_pair,
    _dec_plan,
    _join,
    _need,
)
from .synth import TrajectorySpec
from .units import M_PER_INCH

_RANGE_FIELDS = ("ctwd_mm", "travel_angle_deg", "work_angle_deg", "speed_ipm")


def read_config(path: str | os.PathLike):
    """Raw document from a JSON or YAML config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise StorageError(f"could not read config file {path}: {e}") from e
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise SchemaError("", f"not valid YAML: {e}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"not valid JSON: {e}") from None


def load_ranges(path: str | os.PathLike) -> TargetRanges:
    """Target ranges with per-parameter override of the defaults."""
    d = _dec_obj(read_config(path), "")
    for key in d:
        if key not in _RANGE_FIELDS:
            raise SchemaError(key, "unknown range parameter")
    kwargs = {name: _dec_pair(d[name], name) for name in _RANGE_FIELDS if name in d}
    try:
        return replace(TargetRanges(), **kwargs)
    except ValueError as e:
        raise SchemaError("", str(e)) from None


def load_plan(path: str | os.PathLike) -> LessonPlan:
    return _dec_plan(read_config(path), "")


@dataclass(frozen=True)
class LineScript:
    """One scripted weld line: trajectory plus tracker noise to inject."""

    spec: TrajectorySpec
    position_sd_m: float = 0.0
    orientation_sd_deg: float = 0.0
    seed: int = 0


def load_script(path: str | os.PathLike, calib: CalibrationState) -> list[LineScript]:
    """Trajectory script -> concrete line scripts on the given bench.

    Each entry gives grid coordinates (`start_uv`, metres) and a length in
    inches plus the skill-parameter targets; optional `noise` adds tracker
    jitter when the script is simulated.
    """
    d = _dec_obj(read_config(path), "")
    v, p = _need(d, "lines", "")
    out = []
    for i, item in enumerate(_dec_list(v, p)):
        lp = f"{p}[{i}]"
        ld = _dec_obj(item, lp)
        spec_kwargs = {}
        start_uv = (0.0, 0.0)
        if "start_uv" in ld:
            pair = _dec_pair(ld["start_uv"], _join(lp, "start_uv"))
            start_uv = (float(pair[0]), float(pair[1]))
        v2, p2 = _need(ld, "length_in", lp)
        length_in = _dec_float(v2, p2)
        if not length_in > 0:
            raise SchemaError(p2, "length must be positive")
        for name in ("speed_ipm", "ctwd_mm", "travel_angle_deg", "work_angle_deg"):
            if name in ld:
                spec_kwargs[name] = _dec_float(ld[name], _join(lp, name))
        if "tilt_sign" in ld:
            sign = _dec_int(ld["tilt_sign"], _join(lp, "tilt_sign"))
            if sign not in (-1, 1):
                raise SchemaError(_join(lp, "tilt_sign"), "expected -1 or 1")
            spec_kwargs["tilt_sign"] = sign
        if ld.get("duration_s") is not None:
            spec_kwargs["duration_s"] = _dec_float(ld["duration_s"], _join(lp, "duration_s"))
        if "frame_rate" in ld:
            spec_kwargs["frame_rate"] = _dec_float(ld["frame_rate"], _join(lp, "frame_rate"))
        if "start_time" in ld:
            spec_kwargs["start_time"] = _dec_float(ld["start_time"], _join(lp, "start_time"))
        line = WeldLineSpec.on_bench(calib, start_uv=start_uv, length=length_in * M_PER_INCH)
        try:
            spec = TrajectorySpec(line=line, **spec_kwargs)
        except ValueError as e:
            raise SchemaError(lp, str(e)) from None

        noise_kwargs = {}
        if "noise" in ld and ld["noise"] is not None:
            np_ = _join(lp, "noise")
            nd = _dec_obj(ld["noise"], np_)
            if "position_sd_m" in nd:
                noise_kwargs["position_sd_m"] = _dec_float(nd["position_sd_m"], _join(np_, "position_sd_m"))
            if "orientation_sd_deg" in nd:
                noise_kwargs["orientation_sd_deg"] = _dec_float(
                    nd["orientation_sd_deg"], _join(np_, "orientation_sd_deg")
                )
            if "seed" in nd:
                noise_kwargs["seed"] = _dec_int(nd["seed"], _join(np_, "seed"))
        out.append(LineScript(spec=spec, **noise_kwargs))
    return out
