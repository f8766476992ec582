import { describe, expect, it } from "vitest";

import type { FeedbackEvent, Sample, SessionLog } from "../src/protocol.js";
import { ReplayModel, parseSessionLog } from "../src/replay.js";
import { defaultRanges, flatCalibration, twoModulePlan } from "./fixtures.js";

function mkSample(i: number, over: Partial<Sample> = {}): Sample {
  return {
    timestamp: i / 90,
    frame_index: i,
    ctwd: 10,
    travel_angle: 0,
    work_angle: 90,
    work_tilt: 0,
    tip_u: i * 1e-4,
    tip_v: 0,
    raw_speed: 20,
    kalman_speed: 20,
    speed: 20,
    speed_signed: 20,
    valid: true,
    drift_flag: false,
    ...over,
  };
}

function mkLog(lines: { samples: Sample[]; events: FeedbackEvent[]; spans?: [number, number][] }[]): SessionLog {
  return {
    schema: "1",
    header: { participant: "P01", sequence: "AR-first", condition: "AR", started_at: 0 },
    ranges: defaultRanges(),
    calibration: flatCalibration(),
    lesson: {
      plan: twoModulePlan(),
      module_index: 0,
      line_index: lines.length,
      extra_lines: [0, 0],
      summaries: [[], []],
      complete: false,
    },
    lines: lines.map((spec, i) => ({
      module: "ctwd",
      line_index: i,
      assisted: true,
      tracked: ["ctwd"],
      calibration: flatCalibration(),
      line_spec: { start_point: [0, 0, 0], direction: [1, 0, 0], length: 0.05 },
      frames: [],
      samples: spec.samples,
      events: spec.events,
      summary: {
        shares: { ctwd: { within_n: spec.samples.length, above_n: 0, below_n: 0 } },
        smoothness: 0.5,
        accuracy_mm: 1.0,
        valid_frame_count: spec.samples.length,
        excluded: false,
        exclusion_reason: null,
      },
      screening: { kind: "valid", detail: "ok" },
      drift: {
        flagged_indices: [],
        event_spans: spec.spans ?? [],
        frame_count: spec.samples.length,
      },
      completed: true,
    })),
  };
}

const GREEN_EVENTS: FeedbackEvent[] = [
  { parameter: "ctwd", state: "within", hint: "ok", onset: 0.1, offset: null },
  { parameter: "speed", state: "within", hint: "ok", onset: 0.5, offset: null },
];

describe("parseSessionLog", () => {
  it("round trips a well-formed log", () => {
    const log = mkLog([{ samples: [mkSample(0)], events: [] }]);
    const parsed = parseSessionLog(JSON.stringify(log));
    expect(parsed.lines).toHaveLength(1);
    expect(parsed.header.participant).toBe("P01");
  });

  it("reports broken JSON as such", () => {
    expect(() => parseSessionLog("{nope")).toThrow(/not valid JSON:/);
  });

  it("names the offending field on schema mismatch", () => {
    const log = mkLog([{ samples: [], events: [] }]) as unknown as Record<string, unknown>;
    delete log.ranges;
    expect(() => parseSessionLog(JSON.stringify(log))).toThrow(/^ranges:/);
  });

  it("points into nested records", () => {
    const log = mkLog([{ samples: [mkSample(0)], events: [] }]);
    (log.lines[0]!.samples[0] as unknown as Record<string, unknown>).valid = "yes";
    expect(() => parseSessionLog(JSON.stringify(log))).toThrow(/lines\.0\.samples\.0\.valid/);
  });
});

describe("scrubbing", () => {
  it("a green-only line shows no red overlay at any scrub point", () => {
    const samples = Array.from({ length: 90 }, (_, i) => mkSample(i));
    const model = new ReplayModel(mkLog([{ samples, events: GREEN_EVENTS }]));
    const [start, end] = model.span(0);
    for (let k = 0; k <= 20; k += 1) {
      const t = start + ((end - start) * k) / 20;
      const view = model.viewAt(0, t);
      for (const widget of Object.values(view.widgets)) {
        expect(widget.state === null || widget.state === "within").toBe(true);
        expect(widget.label).toBe("");
      }
      expect(view.driftBadge).toBe(false);
    }
  });

  it("an off-range event turns red from its onset and recovers on the next within", () => {
    const samples = Array.from({ length: 90 }, (_, i) => mkSample(i));
    const events: FeedbackEvent[] = [
      { parameter: "ctwd", state: "above", hint: "too_far", onset: 0.2, offset: 0.6 },
      { parameter: "ctwd", state: "within", hint: "ok", onset: 0.6, offset: null },
    ];
    const model = new ReplayModel(mkLog([{ samples, events }]));
    expect(model.viewAt(0, 0.1).widgets.ctwd.state).toBeNull();
    const mid = model.viewAt(0, 0.4).widgets.ctwd;
    expect(mid.state).toBe("above");
    expect(mid.label).toBe("Too far from table");
    expect(model.viewAt(0, 0.9).widgets.ctwd.state).toBe("within");
  });

  it("the drift badge lights exactly inside a drift span", () => {
    const samples = Array.from({ length: 30 }, (_, i) => mkSample(i));
    const model = new ReplayModel(
      mkLog([{ samples, events: [], spans: [[10, 14]] }]),
    );
    expect(model.viewAt(0, samples[5]!.timestamp).driftBadge).toBe(false);
    expect(model.viewAt(0, samples[10]!.timestamp).driftBadge).toBe(true);
    expect(model.viewAt(0, samples[14]!.timestamp).driftBadge).toBe(true);
    expect(model.viewAt(0, samples[20]!.timestamp).driftBadge).toBe(false);
  });

  it("a flagged sample lights the badge even without a span", () => {
    const samples = [mkSample(0), mkSample(1, { drift_flag: true }), mkSample(2)];
    const model = new ReplayModel(mkLog([{ samples, events: [] }]));
    expect(model.viewAt(0, samples[1]!.timestamp).driftBadge).toBe(true);
    expect(model.viewAt(0, samples[2]!.timestamp).driftBadge).toBe(false);
  });

  it("scrubbing before the first sample shows the idle widgets", () => {
    const samples = [mkSample(10), mkSample(11)];
    const model = new ReplayModel(mkLog([{ samples, events: GREEN_EVENTS }]));
    const view = model.viewAt(0, 0.01);
    expect(view.sampleIndex).toBeNull();
    expect(view.driftBadge).toBe(false);
  });
});

describe("playback schedule", () => {
  const events: FeedbackEvent[] = [
    { parameter: "speed", state: "below", hint: "too_slow", onset: 0.9, offset: null },
    { parameter: "ctwd", state: "above", hint: "too_far", onset: 0.3, offset: null },
    { parameter: "work_angle", state: "within", hint: "tilt_left", onset: 0.3, offset: null },
  ];

  it("orders events by onset and the order is rate-invariant", () => {
    const samples = Array.from({ length: 90 }, (_, i) => mkSample(i));
    const model = new ReplayModel(mkLog([{ samples, events }]));
    const at1 = model.schedule(0, 1);
    const at2 = model.schedule(0, 2);
    expect(at1.map((s) => s.event)).toEqual(at2.map((s) => s.event));
    expect(at1.map((s) => s.event.parameter)).toEqual(["ctwd", "work_angle", "speed"]);
    for (let i = 0; i < at1.length; i += 1) {
      expect(at2[i]!.atMs).toBeCloseTo(at1[i]!.atMs / 2, 9);
    }
  });

  it("rejects nonsense rates", () => {
    const model = new ReplayModel(mkLog([{ samples: [mkSample(0)], events: [] }]));
    expect(() => model.schedule(0, 0)).toThrow(/rate/);
  });

  it("refuses to index a line that is not there", () => {
    const model = new ReplayModel(mkLog([{ samples: [], events: [] }]));
    expect(() => model.line(2)).toThrow(/no line 2/);
  });
});
