import math

import numpy as np
import pytest

from weldkit import quat
from weldkit.bench import run_bootstrap_bench, run_drift_bench
from weldkit.errors import DegenerateInputError
from weldkit.integrity import (
    DriftReport,
    LineDriftReport,
    ScreeningKind,
    bootstrap_drift_probability,
    detect_drift,
    mark_drift,
    screen_line,
)
from weldkit.pose import CalibrationState, WeldLineSpec
from weldkit.skills import SkillSample, extract_samples
from weldkit.synth import DriftEvent, TrajectorySpec, gen_pass, inject_drift
from weldkit.units import M_PER_INCH

DT = 1.0 / 90.0


def sample(i, ctwd=10.0, speed=20.0, valid=True):
    return SkillSample(
        timestamp=i * DT,
        frame_index=i,
        ctwd=ctwd if valid else math.nan,
        travel_angle=0.0,
        work_angle=90.0,
        work_tilt=0.0,
        tip_u=0.0,
        tip_v=0.0,
        raw_speed=speed if valid else math.nan,
        kalman_speed=speed if valid else math.nan,
        speed=abs(speed) if valid else None,
        speed_signed=speed if valid else None,
        valid=valid,
    )


IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


# --- detect_drift ------------------------------------------------------------


def test_smooth_pass_never_flagged(bench):
    line = WeldLineSpec.on_bench(bench, length=3.0 * M_PER_INCH)
    frames, _ = gen_pass(TrajectorySpec(line=line), bench)
    samples = extract_samples(frames, bench)
    report = detect_drift(samples, [f.orientation for f in frames])
    assert report.event_count == 0
    assert report.flagged_indices == ()
    assert report.affected_frame_fraction == 0.0


def test_injected_step_yields_one_event(bench):
    line = WeldLineSpec.on_bench(bench, length=3.0 * M_PER_INCH)
    frames, _ = gen_pass(TrajectorySpec(line=line), bench)
    drifted, onsets = inject_drift(frames, [DriftEvent(4.0, "normal", 0.040)], bench)
    samples = extract_samples(drifted, bench)
    report = detect_drift(samples, [f.orientation for f in drifted])
    assert report.event_count == 1
    assert report.event_spans[0][0] == onsets[0]


def frames_with_step(step_frame=100, n=200, rotate_deg_s=0.0):
    """Hand-built sample/orientation pair: 40 mm CTWD step at step_frame."""
    samples = [sample(i, ctwd=10.0 if i < step_frame else 50.0) for i in range(n)]
    quats = []
    for i in range(n):
        angle = math.radians(rotate_deg_s * i * DT)
        quats.append(quat.from_axis_angle(np.array([0.0, 0.0, 1.0]), angle))
    return samples, quats


def test_step_with_stable_rotation_flagged():
    samples, quats = frames_with_step(rotate_deg_s=0.0)
    report = detect_drift(samples, quats)
    assert report.event_spans == ((100, 100),)


def test_step_during_fast_rotation_not_flagged():
    # 90 deg/s rotation explains the geometry jump: gate suppresses it.
    samples, quats = frames_with_step(rotate_deg_s=90.0)
    report = detect_drift(samples, quats)
    assert report.event_count == 0


def test_slow_rotation_does_not_mask_step():
    samples, quats = frames_with_step(rotate_deg_s=10.0)
    assert detect_drift(samples, quats).event_count == 1


def test_speed_jump_flagged_only_after_warmup():
    n = 200
    samples = []
    for i in range(n):
        s = sample(i, speed=20.0 if i != 150 else 100.0)
        if i * DT < 0.5:  # display warm-up: no established speed yet
            samples.append(
                SkillSample(
                    timestamp=s.timestamp, frame_index=i, ctwd=10.0, travel_angle=0.0,
                    work_angle=90.0, work_tilt=0.0, tip_u=0.0, tip_v=0.0,
                    raw_speed=120.0 * (i % 2), kalman_speed=120.0 * (i % 2),
                    speed=None, speed_signed=None,
                )
            )
        else:
            samples.append(s)
    report = detect_drift(samples, [IDENTITY] * n)
    # wild kalman values during warm-up are ignored; the real jump at 150
    # is flagged on entry and on return
    assert set(report.flagged_indices) == {150, 151}
    assert report.event_spans == ((150, 151),)


def test_invalid_frames_never_flagged():
    samples = [sample(i) for i in range(50)]
    samples[20] = sample(20, valid=False)
    samples[21] = sample(21, ctwd=60.0)  # neighbor of invalid frame
    report = detect_drift(samples, [IDENTITY] * 50)
    # pair (20,21) involves NaN, pair (21,22) jumps back down: flagged
    assert 21 not in report.flagged_indices
    assert 22 in report.flagged_indices


def test_contiguous_flags_form_one_event():
    samples = [sample(i, ctwd=10.0 + 30.0 * ((i // 3) % 2)) for i in range(12)]
    report = detect_drift(samples, [IDENTITY] * 12)
    assert report.flagged_indices == (3, 6, 9)
    assert report.event_count == 3


def test_mark_drift_sets_flags(bench):
    samples = [sample(i) for i in range(10)]
    report = LineDriftReport((3, 4), ((3, 4),), 10)
    marked = mark_drift(samples, report)
    assert [s.drift_flag for s in marked] == [False] * 3 + [True] * 2 + [False] * 5


def test_misaligned_streams_rejected():
    with pytest.raises(ValueError):
        detect_drift([sample(0)], [IDENTITY, IDENTITY])


def test_drift_report_line_fraction():
    lines = (
        LineDriftReport((5,), ((5, 5),), 100),
        LineDriftReport((), (), 100),
        LineDriftReport((), (), 100),
        LineDriftReport((), (), 100),
    )
    report = DriftReport(lines)
    assert report.drift_line_fraction == 0.25
    assert all(0.0 <= ln.affected_frame_fraction <= 1.0 for ln in lines)
    assert DriftReport(()).drift_line_fraction == 0.0


def test_drift_bench_recall_and_fpr():
    result = run_drift_bench(n_lines=6, seed=0)
    assert result.recall >= 0.95
    assert result.false_positive_rate <= 0.01


# --- screen_line --------------------------------------------------------------


def test_screen_negative_ctwd_excluded():
    samples = [sample(i, ctwd=v) for i, v in enumerate([10.0, 4.0, -5.0, 8.0])]
    verdict = screen_line(samples)
    assert verdict.kind is ScreeningKind.EXCLUDED_NEGATIVE_CTWD
    assert verdict.excluded
    assert "-5.0" in verdict.detail


def test_screen_small_negative_within_tolerance():
    samples = [sample(i, ctwd=v) for i, v in enumerate([2.0, -0.5, 1.0])]
    assert screen_line(samples).kind is ScreeningKind.VALID


def test_screen_extreme_initial_flagged():
    values = [80.0] * 10 + [10.0] * 40
    samples = [sample(i, ctwd=v) for i, v in enumerate(values)]
    verdict = screen_line(samples)
    assert verdict.kind is ScreeningKind.FLAGGED_EXTREME_INITIAL_CTWD
    assert verdict.flagged and not verdict.excluded


def test_screen_nominal_line_valid():
    samples = [sample(i) for i in range(30)]
    assert screen_line(samples).kind is ScreeningKind.VALID


def test_screen_exclusion_beats_flag():
    values = [80.0] * 10 + [-5.0] + [10.0] * 10
    samples = [sample(i, ctwd=v) for i, v in enumerate(values)]
    assert screen_line(samples).kind is ScreeningKind.EXCLUDED_NEGATIVE_CTWD


def test_screen_negative_rule_order_insensitive():
    rng = np.random.default_rng(3)
    values = list(rng.uniform(2.0, 30.0, size=40)) + [-4.0]
    for _ in range(10):
        rng.shuffle(values)
        samples = [sample(i, ctwd=v) for i, v in enumerate(values)]
        assert screen_line(samples).excluded


def test_screen_ignores_invalid_frames():
    samples = [sample(i, ctwd=-9.0, valid=False) for i in range(5)]
    samples += [sample(i + 5) for i in range(5)]
    assert screen_line(samples).kind is ScreeningKind.VALID


def test_screen_no_valid_frames():
    samples = [sample(i, valid=False) for i in range(5)]
    assert screen_line(samples).kind is ScreeningKind.VALID


# --- bootstrap ---------------------------------------------------------------


def test_bootstrap_all_false_is_zero():
    est = bootstrap_drift_probability([False] * 8, k=4, seed=1)
    assert est.probability == 0.0
    assert est.ci95 == (0.0, 0.0)


def test_bootstrap_all_true_is_one():
    est = bootstrap_drift_probability([True] * 3, k=2, seed=1)
    assert est.probability == 1.0


def test_bootstrap_matches_analytic_rate_quarter():
    outcomes = [True, False, False, False]
    for k, analytic in ((4, 1 - 0.75**4), (6, 1 - 0.75**6)):
        est = bootstrap_drift_probability(outcomes, k=k, seed=17)
        se = math.sqrt(analytic * (1 - analytic) / est.samples)
        assert abs(est.probability - analytic) <= 3 * se
        assert abs(est.probability - analytic) <= 0.015
        assert est.ci95[0] <= est.probability <= est.ci95[1]


def test_bootstrap_deterministic_per_seed():
    outcomes = [True, False, True, False, False]
    a = bootstrap_drift_probability(outcomes, k=5, seed=7)
    b = bootstrap_drift_probability(outcomes, k=5, seed=7)
    c = bootstrap_drift_probability(outcomes, k=5, seed=8)
    assert a == b
    assert abs(a.probability - c.probability) < 0.03


def test_bootstrap_empty_outcomes():
    with pytest.raises(DegenerateInputError):
        bootstrap_drift_probability([], k=4, seed=0)


def test_bootstrap_invalid_k():
    with pytest.raises(ValueError):
        bootstrap_drift_probability([True], k=0, seed=0)


def test_bootstrap_bench_envelopes():
    result = run_bootstrap_bench()
    assert result.k4.probability == pytest.approx(result.analytic_k4, abs=0.015)
    assert result.k6.probability == pytest.approx(result.analytic_k6, abs=0.015)
