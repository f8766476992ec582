"""Accuracy report: geometry, speed, drift, bootstrap, and audio benches.

Runs every built-in validation bench with its default seeds and prints
the numbers the test suite holds tolerances against. Equivalent to the
`weldkit validate` subcommand, with more detail per jig pose.
"""

from weldkit import (
    run_audio_bench,
    run_bootstrap_bench,
    run_drift_bench,
    run_jig_bench,
    run_speed_checks,
)

print("jig geometry, noise-free (max |error| per pose):")
for r in run_jig_bench():
    print(f"  travel {r.travel_deg:5.1f} deg, work {r.work_deg:5.1f} deg, "
          f"{r.length_in:.0f} in: travel {r.max_travel_err:.2e}, work {r.max_work_err:.2e}")

print("\njig geometry with 4 mm / 0.5 deg jitter (mean errors):")
for r in run_jig_bench(position_sd_m=0.004, orientation_sd_deg=0.5, seed=0):
    print(f"  travel {r.travel_deg:5.1f} deg, work {r.work_deg:5.1f} deg, "
          f"{r.length_in:.0f} in: travel {r.mean_travel_err:+.3f} deg, "
          f"work {r.mean_work_err:+.3f} deg, ctwd {r.mean_ctwd_err_mm:+.3f} mm, "
          f"speed {r.mean_speed_err_ipm:+.3f} IPM")

sc = run_speed_checks()
print(f"\nspeed conversion: constant 8.467 mm/s -> {sc.constant_pass_ipm:.4f} IPM, "
      f"stationary -> {sc.stationary_ipm} IPM, orthogonal -> {sc.orthogonal_ipm} IPM")

db = run_drift_bench(seed=0)
print(f"\ndrift detection over {db.injected_events} injected steps "
      f"({db.frames_total} frames): recall {db.recall:.3f}, "
      f"false-positive rate {db.false_positive_rate:.5f}")

bb = run_bootstrap_bench(seed=0)
print(f"bootstrap drift probability: k=4 {bb.k4.probability:.4f} "
      f"(analytic {bb.analytic_k4:.4f}), k=6 {bb.k6.probability:.4f} "
      f"(analytic {bb.analytic_k6:.4f})")

ab = run_audio_bench()
print(f"\nacoustic onset latency: {ab.latency_128:.3f}s at 128-frame buffers, "
      f"{ab.latency_1024:.3f}s at 1024; log alignment shift {ab.align_shift_frames} frames")
