"""Weld onset/offset detection and audio-log alignment.

Two detectors cover the two hardware paths: a mechanical lever that maps
the physical torch trigger onto the controller button (zero added
latency), and an acoustic path that watches the microphone level stream
for weld noise. The acoustic path inherits the latency of the audio
chain, so detections are quantized to audio-buffer completion times:
buffer size, not microphone placement, is the dominant latency factor.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientHistoryError
from .pose import PoseFrame

SOUND_SPEED_M_S = 343.0
DEFAULT_SHIFT_FRAMES = 20

_SUPPORTED_BUFFERS = (128, 1024)
_GRID_EPS = 1e-9


class TriggerKind(Enum):
    MECHANICAL = "mechanical"
    ACOUSTIC = "acoustic"


@dataclass(frozen=True)
class TriggerEvent:
    """One detected weld, [onset, offset); offset is None while active."""

    kind: TriggerKind
    onset: float
    offset: float | None = None
    detection_latency: float | None = None

    def __post_init__(self):
        if self.offset is not None and not self.onset < self.offset:
            raise ValueError("onset must precede offset")


@dataclass(frozen=True)
class AudioConfig:
    buffer_frames: int = 128
    sample_rate: float = 48000.0
    level_threshold: float = 0.3
    hysteresis: float = 0.05
    release_hold_s: float = 0.2
    mic_distance_note: str = ""

    def __post_init__(self):
        if self.buffer_frames not in _SUPPORTED_BUFFERS:
            raise ValueError(f"buffer_frames must be one of {_SUPPORTED_BUFFERS}")
        if not 0.0 < self.level_threshold < 1.0:
            raise ValueError("level_threshold must lie in (0, 1)")
        if not 0.0 <= self.hysteresis < self.level_threshold:
            raise ValueError("hysteresis must lie in [0, level_threshold)")
        if self.sample_rate <= 0 or self.release_hold_s < 0:
            raise ValueError("sample_rate must be positive, release_hold_s nonnegative")

    @property
    def window_s(self) -> float:
        """RMS window duration: one audio buffer."""
        return self.buffer_frames / self.sample_rate


def detect_mechanical(frames: Iterable[PoseFrame]) -> list[TriggerEvent]:
    """Weld events from trigger_down edges; zero added latency."""
    events: list[TriggerEvent] = []
    onset: float | None = None
    for f in frames:
        if f.trigger_down and onset is None:
            onset = f.timestamp
        elif not f.trigger_down and onset is not None:
            events.append(TriggerEvent(TriggerKind.MECHANICAL, onset, f.timestamp))
            onset = None
    if onset is not None:
        events.append(TriggerEvent(TriggerKind.MECHANICAL, onset))
    return events


def _buffer_boundary(t: float, t0: float, window: float) -> float:
    """First buffer completion time at or after t."""
    k = math.ceil((t - t0) / window - _GRID_EPS)
    return t0 + max(k, 0) * window


def detect_onset_acoustic(
    times: Sequence[float],
    levels: Sequence[float],
    cfg: AudioConfig | None = None,
    true_starts: Sequence[float] | None = None,
) -> list[TriggerEvent]:
    """Weld events from a time-ordered microphone level stream.

    Onset fires when the windowed RMS first exceeds the threshold; the
    event closes once the RMS stays below threshold - hysteresis for the
    release hold, with the offset placed at the start of that quiet
    stretch. Detection instants land on audio-buffer boundaries, which
    makes the buffer the latency floor. With true burst start times
    supplied, each event carries detection_latency = onset - nearest
    preceding true start.
    """
    if cfg is None:
        cfg = AudioConfig()
    times = np.asarray(times, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if times.size == 0:
        return []
    t0 = float(times[0])
    window = cfg.window_s
    release_level = cfg.level_threshold - cfg.hysteresis
    starts = sorted(float(s) for s in true_starts) if true_starts is not None else None

    events: list[TriggerEvent] = []
    win: deque[tuple[float, float]] = deque()
    active_onset: float | None = None
    active_latency: float | None = None
    below_since: float | None = None

    def close(offset: float | None):
        nonlocal active_onset, active_latency, below_since
        events.append(
            TriggerEvent(TriggerKind.ACOUSTIC, active_onset, offset, active_latency)
        )
        active_onset = active_latency = below_since = None

    for t, v in zip(times, levels):
        t = float(t)
        win.append((t, float(v)))
        while win and win[0][0] < t - window - _GRID_EPS:
            win.popleft()
        rms = math.sqrt(sum(lv * lv for _, lv in win) / len(win))
        if active_onset is None:
            if rms > cfg.level_threshold:
                active_onset = _buffer_boundary(t, t0, window)
                if starts is not None:
                    prior = [s for s in starts if s <= active_onset]
                    active_latency = active_onset - prior[-1] if prior else None
        else:
            if rms < release_level:
                if below_since is None:
                    below_since = t
                if t - below_since >= cfg.release_hold_s:
                    close(below_since)
            else:
                below_since = None
    if active_onset is not None:
        close(None)
    return events


def align_audio_log(
    frames: Sequence[PoseFrame],
    onset_index: int,
    shift_frames: int = DEFAULT_SHIFT_FRAMES,
) -> list[PoseFrame]:
    """Analysis window for an acoustically triggered weld.

    The acoustic chain detects late, so the window opens shift_frames
    before the detected onset to cover the true weld start. Frames are
    returned unmodified. Shifting the reference by a and then by b from
    the moved start equals one shift by a + b.
    """
    if shift_frames < 0:
        raise ValueError("shift_frames must be nonnegative")
    if onset_index < shift_frames:
        raise InsufficientHistoryError(
            f"onset at frame {onset_index} has fewer than {shift_frames} frames of history"
        )
    return list(frames[onset_index - shift_frames :])
