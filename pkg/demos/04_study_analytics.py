"""Reproduce the crossover-study learning analytics from bundled data.

The package ships the per-participant segment scores (24 welders, two
training sequences, two conditions each). Averaging them recovers the
group table; regressing each group's first-condition row gives the
learning slopes; Welch's t compares per-participant slopes between
sequences; and the switch deltas quantify the cost of changing
condition mid-study.
"""

import numpy as np

from weldkit import (
    Condition,
    StudySequence,
    first_condition_slopes,
    group_switch_delta,
    learning_slope,
    load_crossover_segments,
    segment_table,
    table_row,
    two_sample_t,
)
from weldkit.analytics import ORDERED_SEGMENTS

rows = load_crossover_segments()
print(f"{len(rows)} participant-condition rows "
      f"({len({r.participant for r in rows})} participants)")

table = segment_table(rows)
short = {"travel_angle": "travel", "work_angle": "work"}
print("\ngroup means by segment:")
print(" " * 20 + " ".join(f"{short.get(s.value, s.value):>7}" for s in ORDERED_SEGMENTS))
for seq in StudySequence:
    for cond in Condition:
        vals = table_row(table, seq, cond)
        label = f"{seq.value}/{cond.value}"
        print(f"  {label:<18}" + " ".join(f"{v:7.3f}" for v in vals))

print("\nfirst-condition learning slopes (z per segment):")
for seq, cond in ((StudySequence.AR_FIRST, Condition.AR),
                  (StudySequence.VIDEO_FIRST, Condition.VIDEO)):
    slope = learning_slope(table_row(table, seq, cond))
    print(f"  {seq.value}: {slope:+.4f}")

a = first_condition_slopes(rows, StudySequence.AR_FIRST)
b = first_condition_slopes(rows, StudySequence.VIDEO_FIRST)
t = two_sample_t(a, b)
print(f"\nper-participant slopes: AR-first mean {np.mean(a):+.4f} (n={len(a)}), "
      f"Video-first mean {np.mean(b):+.4f} (n={len(b)})")
print(f"Welch t={t.t:.3f}, p={t.p:.4f}, df={t.df:.1f}")

print("\nswitch deltas (deviation jump when the condition changes):")
for seq in StudySequence:
    print(f"  {seq.value}: {group_switch_delta(rows, seq):+.4f}")
