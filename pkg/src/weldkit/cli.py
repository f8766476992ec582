"""Command-line entry point.

Subcommands: serve (live WebSocket service), ingest (validate and
summarize logs), analyze (segment tables, slopes, switch deltas),
simulate (drive the engine over a trajectory script), replay (determinism
check over a stored log), validate (accuracy/drift/audio bench).

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, config
from .analytics import (
    ORDERED_SEGMENTS,
    Condition,
    LineData,
    ParticipantSegmentRow,
    StudySequence,
    ALL_PARAMETERS,
    first_condition_slopes,
    group_switch_delta,
    lines_from_sessions,
    load_crossover_segments,
    participant_summary,
    segment_table,
    table_row,
    two_sample_t,
    zscore_lines,
)
from .bench import run_audio_bench, run_bootstrap_bench, run_drift_bench, run_jig_bench, run_speed_checks
from .errors import WeldkitError
from .feedback import default_plan
from .pose import CalibrationState, TargetRanges
from .session import (
    SessionEngine,
    SessionHeader,
    encode_session,
    load,
    persist,
    rerun,
)
from .synth import gen_pass, inject_noise


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weldkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--storage-dir", default=".", help="directory for session checkpoints")
    p.add_argument("--ranges", help="target-ranges config file (JSON/YAML)")
    p.add_argument("--lesson-plan", help="lesson-plan config file (JSON/YAML)")

    p = sub.add_parser("ingest", help="validate session logs and summarize them")
    p.add_argument("logs", nargs="+", help="session log files")

    p = sub.add_parser("analyze", help="segment tables, learning slopes, switch deltas")
    p.add_argument("logs", nargs="*", help="session log files (omit to use --segments)")
    p.add_argument("--segments", nargs="?", const="", metavar="CSV",
                   help="per-participant segment CSV; no value uses the bundled study table")
    p.add_argument("--tables", choices=["segments"], help="print the group segment table")
    p.add_argument("--slopes", action="store_true", help="print first-condition group slopes")
    p.add_argument("--deltas", action="store_true", help="print group switch deltas")
    p.add_argument("--json", action="store_true", help="emit structured output instead of CSV")
    p.add_argument("--ranges", help="target-ranges config file (JSON/YAML)")
    p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("simulate", help="synthesize a session from a trajectory script")
    p.add_argument("script", help="trajectory script (JSON/YAML)")
    p.add_argument("--participant", default="SIM")
    p.add_argument("--sequence", choices=[s.value for s in StudySequence], default="AR-first")
    p.add_argument("--condition", choices=[c.value for c in Condition], default="AR")
    p.add_argument("--seed", type=int, default=0, help="offsets every scripted noise seed")
    p.add_argument("--ranges", help="target-ranges config file (JSON/YAML)")
    p.add_argument("--lesson-plan", help="lesson-plan config file (JSON/YAML)")
    p.add_argument("--out", required=True, help="session log to write")

    p = sub.add_parser("replay", help="re-run a log and check determinism")
    p.add_argument("log", help="session log file")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--out", help="write the re-derived session log here")

    p = sub.add_parser("validate", help="run the accuracy/drift/audio bench")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="smaller drift/bootstrap runs")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except WeldkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _load_ranges(args) -> TargetRanges:
    if getattr(args, "ranges", None):
        return config.load_ranges(args.ranges)
    return TargetRanges()


def _load_plan(args):
    if getattr(args, "lesson_plan", None):
        return config.load_plan(args.lesson_plan)
    return default_plan()


def _cmd_serve(args) -> int:
    from .server import serve

    serve(
        port=args.port,
        host=args.host,
        storage_dir=args.storage_dir,
        ranges=_load_ranges(args),
        plan=_load_plan(args),
    )
    return 0


def _cmd_ingest(args) -> int:
    for path in args.logs:
        s = load(path)
        frames = sum(len(rec.frames) for rec in s.lines)
        events = sum(len(rec.events) for rec in s.lines)
        excluded = sum(1 for rec in s.lines if rec.summary.excluded)
        drifted = sum(1 for rec in s.lines if rec.drift.event_count > 0)
        print(
            f"{path}: participant={s.header.participant} condition={s.header.condition.value} "
            f"lines={len(s.lines)} frames={frames} events={events} "
            f"excluded={excluded} drift_lines={drifted}"
        )
    return 0


def _line_data_from_logs(paths: list[str]) -> list[LineData]:
    line_data = []
    for path in paths:
        s = load(path)
        for rec in s.lines:
            if not rec.completed:
                continue
            line_data.append(
                LineData(
                    participant=s.header.participant,
                    sequence=s.header.sequence,
                    condition=s.header.condition,
                    module=rec.module,
                    line_index=rec.line_index,
                    samples=rec.samples,
                )
            )
    return line_data


def _deviations_from_logs(paths: list[str], ranges: TargetRanges):
    return lines_from_sessions(_line_data_from_logs(paths), ranges)


def _render_deviations(deviations) -> str:
    lines = ["participant,condition,segment,line_index,ctwd,travel_angle,work_angle,speed"]
    for d in deviations:
        vals = ",".join(f"{d.deviations[p]:.6g}" for p in ALL_PARAMETERS)
        lines.append(
            f"{d.participant},{d.condition.value},{d.segment.value},{d.line_index},{vals}"
        )
    return "\n".join(lines) + "\n"


def _rows_from_logs(paths: list[str], ranges: TargetRanges) -> list[ParticipantSegmentRow]:
    """Per-participant segment rows derived from raw session logs."""
    deviations = lines_from_sessions(_line_data_from_logs(paths), ranges)
    zlines = zscore_lines(deviations)
    rows = []
    for participant in sorted({z.participant for z in zlines}):
        mine = [z for z in zlines if z.participant == participant]
        metrics = participant_summary(mine)
        for cond, seg_values in metrics.segment_values.items():
            rows.append(
                ParticipantSegmentRow(
                    participant=participant,
                    sequence=metrics.sequence,
                    condition=cond,
                    values=dict(seg_values),
                )
            )
    return rows


def _cmd_analyze(args) -> int:
    want_derived = args.tables is not None or args.slopes or args.deltas
    if args.segments is not None:
        if args.logs:
            print("error: pass logs or --segments, not both", file=sys.stderr)
            return 2
        if args.segments == "":
            rows = load_crossover_segments()
        else:
            rows = analytics.parse_segment_rows(Path(args.segments).read_text())
    elif args.logs:
        if not want_derived:
            # Bare logs: per-line deviation scores, no pooling.
            text = _render_deviations(_deviations_from_logs(args.logs, _load_ranges(args)))
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return 0
        rows = _rows_from_logs(args.logs, _load_ranges(args))
    else:
        print("error: analyze needs session logs or --segments", file=sys.stderr)
        return 2

    # Default output is the segment table; flags add the derived stats.
    want_table = args.tables is not None or not (args.slopes or args.deltas)
    out: dict = {}
    if want_table:
        table = segment_table(rows)
        out["segments"] = [
            {
                "sequence": seq.value,
                "condition": cond.value,
                **{
                    seg.value: round(v, 6)
                    for seg, v in zip(
                        ORDERED_SEGMENTS, table_row(table, seq, cond)
                    )
                },
            }
            for seq in StudySequence
            for cond in Condition
            if all((seq, cond, seg) in table for seg in ORDERED_SEGMENTS)
        ]
    if args.slopes:
        slopes = {}
        for seq in StudySequence:
            vals = first_condition_slopes(rows, seq)
            if vals:
                slopes[seq.value] = {
                    "mean": float(np.mean(vals)),
                    "per_participant": [float(v) for v in vals],
                }
        if len(slopes) == 2:
            t = two_sample_t(
                slopes[StudySequence.AR_FIRST.value]["per_participant"],
                slopes[StudySequence.VIDEO_FIRST.value]["per_participant"],
            )
            slopes["welch_t"] = {"t": t.t, "p": t.p, "df": t.df}
        out["slopes"] = slopes
    if args.deltas:
        out["deltas"] = {
            seq.value: group_switch_delta(rows, seq) for seq in StudySequence
        }

    text = _render_analysis(out, as_json=args.json)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _render_analysis(out: dict, as_json: bool) -> str:
    if as_json:
        return json.dumps(out, indent=2, sort_keys=True) + "\n"
    lines = []
    if "segments" in out:
        cols = ["sequence", "condition"] + [s.value for s in ORDERED_SEGMENTS]
        lines.append(",".join(cols))
        for row in out["segments"]:
            lines.append(",".join(str(row[c]) for c in cols))
    if "slopes" in out:
        for key, val in out["slopes"].items():
            if key == "welch_t":
                lines.append(
                    f"welch_t,{val['t']:.3f},p,{val['p']:.4f},df,{val['df']:.1f}"
                )
            else:
                lines.append(f"slope,{key},{val['mean']:.6f}")
    if "deltas" in out:
        for key, val in out["deltas"].items():
            lines.append(f"switch_delta,{key},{val:.6f}")
    return "\n".join(lines) + "\n"


def _cmd_simulate(args) -> int:
    calib = CalibrationState.bench()
    scripts = config.load_script(args.script, calib)
    header = SessionHeader(
        participant=args.participant,
        sequence=StudySequence(args.sequence),
        condition=Condition(args.condition),
    )
    engine = SessionEngine(header, calib, ranges=_load_ranges(args), plan=_load_plan(args))
    for script in scripts:
        frames, _ = gen_pass(script.spec, calib)
        if script.position_sd_m > 0 or script.orientation_sd_deg > 0:
            frames = inject_noise(
                frames,
                position_sd_m=script.position_sd_m,
                orientation_sd_deg=script.orientation_sd_deg,
                seed=script.seed + args.seed,
            )
        engine.start_line(line_spec=script.spec.line)
        for f in frames:
            engine.ingest(f)
        engine.end_line()
    persist(engine.session(), args.out)
    print(f"wrote {args.out}: {len(scripts)} lines")
    return 0


def _cmd_replay(args) -> int:
    session = load(args.log)
    if not args.speed > 0:
        print("error: --speed must be positive", file=sys.stderr)
        return 2
    redone = rerun(session)
    match = encode_session(redone) == encode_session(session)
    for i, (orig, new) in enumerate(zip(session.lines, redone.lines)):
        ok = "match" if _line_bytes(orig) == _line_bytes(new) else "MISMATCH"
        print(
            f"line {i}: module={orig.module.value} frames={len(orig.frames)} "
            f"events={len(new.events)} [{ok}]"
        )
    if not session.lines:
        print("empty session: nothing to replay")
    print("replay deterministic:", "yes" if match else "NO")
    if args.out:
        persist(redone, args.out)
    return 0 if match else 1


def _line_bytes(rec) -> str:
    from .session import _enc_line

    return json.dumps(_enc_line(rec), sort_keys=True, allow_nan=False)


def _cmd_validate(args) -> int:
    failures = 0

    def check(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures += 1

    clean = run_jig_bench(seed=args.seed)
    worst = max(max(r.max_travel_err, r.max_work_err) for r in clean)
    check("jig angles (noise-free)", worst < 1e-6, f"worst angle error {worst:.2e} deg")

    noisy = run_jig_bench(position_sd_m=0.004, orientation_sd_deg=0.5, seed=args.seed)
    t_err = float(np.mean([r.mean_travel_err for r in noisy]))
    w_err = float(np.mean([r.mean_work_err for r in noisy]))
    c_err = float(np.mean([r.mean_ctwd_err_mm for r in noisy]))
    s_err = float(np.mean([r.mean_speed_err_ipm for r in noisy]))
    check(
        "jig angles (4 mm / 0.5 deg jitter)",
        t_err <= 1.0 and w_err <= 2.0 and c_err <= 4.0 and s_err <= 1.1,
        f"mean errs travel {t_err:.3f} deg, work {w_err:.3f} deg, ctwd {c_err:.3f} mm, speed {s_err:.3f} ipm",
    )

    sc = run_speed_checks()
    check(
        "speed tracking",
        abs(sc.constant_pass_ipm - 20.0) <= 0.1
        and sc.stationary_ipm == 0.0
        and sc.orthogonal_ipm == 0.0,
        f"constant {sc.constant_pass_ipm:.4f} ipm, stationary {sc.stationary_ipm}, "
        f"orthogonal {sc.orthogonal_ipm}",
    )

    n_lines = 6 if args.quick else 12
    dr = run_drift_bench(n_lines=n_lines, seed=args.seed)
    check(
        "drift detection",
        dr.recall >= 0.95 and dr.false_positive_rate <= 0.01,
        f"recall {dr.recall:.3f}, FPR {dr.false_positive_rate:.5f}",
    )

    bb = run_bootstrap_bench(seed=args.seed)
    check(
        "drift bootstrap",
        abs(bb.k4.probability - bb.analytic_k4) <= 0.015
        and abs(bb.k6.probability - bb.analytic_k6) <= 0.015,
        f"p(k=4) {bb.k4.probability:.4f} vs {bb.analytic_k4:.4f}, "
        f"p(k=6) {bb.k6.probability:.4f} vs {bb.analytic_k6:.4f}",
    )

    ab = run_audio_bench()
    check(
        "acoustic trigger latency",
        ab.latency_128 <= 0.21 and ab.align_shift_frames == 20,
        f"latency {ab.latency_128:.3f} s (128-frame buffer), "
        f"log shift {ab.align_shift_frames} frames",
    )

    return 1 if failures else 0


_COMMANDS = {
    "serve": _cmd_serve,
    "ingest": _cmd_ingest,
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "replay": _cmd_replay,
    "validate": _cmd_validate,
}


if __name__ == "__main__":
    sys.exit(main())
