"""Stream a synthetic weld pass and watch the live hint timeline.

Three short passes are scripted against the default target ranges: one
held too far from the plate, one centered on every parameter, and one
rushed well past the speed ceiling. Each frame runs through the same
extractor/tracker pair a headset would feed at 90 Hz.
"""

from weldkit import (
    CalibrationState,
    FeedbackTracker,
    SkillExtractor,
    TargetRanges,
    TrajectorySpec,
    WeldLineSpec,
    gen_pass,
)

calib = CalibrationState.bench()
ranges = TargetRanges()

passes = [
    ("held too far", dict(ctwd_mm=19.0, work_angle_deg=82.5)),
    ("centered", dict(ctwd_mm=10.0, work_angle_deg=82.5)),
    ("rushed", dict(speed_ipm=34.0, work_angle_deg=82.5)),
]

for title, overrides in passes:
    spec = TrajectorySpec(line=WeldLineSpec.on_bench(calib), duration_s=4.0, **overrides)
    frames, _ = gen_pass(spec, calib)

    extractor = SkillExtractor(calib)
    tracker = FeedbackTracker(ranges)
    opened = []
    for frame in frames:
        sample = extractor.consume(frame)
        opened.extend(tracker.consume(sample))
    events = tracker.finalize()

    print(f"\n--- {title} ({len(frames)} frames) ---")
    for e in opened:
        print(f"  t={e.onset:6.2f}s  {e.parameter.value:<12} {e.state.value:<6} -> {e.hint.value}")
    total = sum((e.offset or frames[-1].timestamp) - e.onset for e in events)
    print(f"  {len(events)} events, {total:.1f}s of open hint time")
