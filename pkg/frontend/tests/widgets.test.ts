import { describe, expect, it } from "vitest";

import type { FeedbackEvent, Sample, ServerMessage } from "../src/protocol.js";
import {
  HINT_LABELS,
  initialModel,
  reduce,
  summaryView,
  type BoothModel,
} from "../src/widgets.js";
import { defaultRanges, flatCalibration, twoModulePlan } from "./fixtures.js";

function mkSample(over: Partial<Sample> = {}): Sample {
  return {
    timestamp: 0,
    frame_index: 0,
    ctwd: 10,
    travel_angle: 0,
    work_angle: 90,
    work_tilt: 0,
    tip_u: 0,
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

function mkEvent(over: Partial<FeedbackEvent> = {}): FeedbackEvent {
  return { parameter: "ctwd", state: "within", hint: "too_far", onset: 0, offset: null, ...over };
}

const welcome: ServerMessage = {
  type: "welcome",
  session_id: "s1",
  ranges: defaultRanges(),
  plan: twoModulePlan(),
  calibration: flatCalibration(),
};

const lineStarted: ServerMessage = {
  type: "line_started",
  module: "ctwd",
  line_index: 0,
  assisted: true,
  tracked: ["ctwd"],
};

function freshLine(): BoothModel {
  return reduce(reduce(initialModel(), welcome), lineStarted);
}

describe("handshake and line start", () => {
  it("welcome stores the session configuration", () => {
    const m = reduce(initialModel(), welcome);
    expect(m.phase).toBe("between");
    expect(m.sessionId).toBe("s1");
    expect(m.ranges?.ctwd_mm).toEqual([6, 15]);
    expect(m.plan?.modules).toHaveLength(2);
  });

  it("line start resets widgets and shows the progress badge from the plan", () => {
    const m = freshLine();
    expect(m.phase).toBe("welding");
    expect(m.badge).toEqual({ module: "ctwd", n: 1, total: 2 });
    expect(m.widgets.ctwd.state).toBeNull();
  });

  it("a retry line past the nominal count still renders a sane badge", () => {
    const m = reduce(reduce(initialModel(), welcome), {
      ...lineStarted,
      line_index: 3,
    } as ServerMessage);
    expect(m.badge).toEqual({ module: "ctwd", n: 4, total: 4 });
  });
});

describe("feedback widgets", () => {
  it("an off-range event paints the exact overlay text", () => {
    let m = freshLine();
    m = reduce(m, {
      type: "sample",
      sample: mkSample(),
      feedback: [mkEvent({ state: "above", hint: "too_far", onset: 0.5 })],
    });
    expect(m.widgets.ctwd.state).toBe("above");
    expect(m.widgets.ctwd.label).toBe("Too far from table");
    expect(m.widgets.travel_angle.state).toBeNull();
  });

  it("a within event is a green circle with no text", () => {
    let m = freshLine();
    m = reduce(m, {
      type: "sample",
      sample: mkSample(),
      feedback: [mkEvent({ state: "within", hint: "ok" })],
    });
    expect(m.widgets.ctwd.state).toBe("within");
    expect(m.widgets.ctwd.label).toBe("");
    expect(m.widgets.ctwd.arrow).toBeNull();
  });

  it("tilt hints carry directional arrows", () => {
    let m = freshLine();
    m = reduce(m, {
      type: "sample",
      sample: mkSample(),
      feedback: [
        mkEvent({ parameter: "work_angle", state: "below", hint: "tilt_left", onset: 1 }),
        mkEvent({ parameter: "travel_angle", state: "above", hint: "tilt_backward", onset: 1 }),
      ],
    });
    expect(m.widgets.work_angle.arrow).toBe("←");
    expect(m.widgets.work_angle.label).toBe(HINT_LABELS.tilt_left);
    expect(m.widgets.travel_angle.arrow).toBe("↓");
  });

  it("never reclassifies: wild sample values without an event change nothing", () => {
    let m = freshLine();
    m = reduce(m, {
      type: "sample",
      sample: mkSample(),
      feedback: [mkEvent({ state: "within", hint: "ok" })],
    });
    // CTWD is far outside every range, but the engine sent no event.
    m = reduce(m, {
      type: "sample",
      sample: mkSample({ ctwd: 99, frame_index: 1, timestamp: 0.011 }),
      feedback: [],
    });
    expect(m.widgets.ctwd.state).toBe("within");
    expect(m.widgets.ctwd.label).toBe("");
  });

  it("the latest event per parameter wins", () => {
    let m = freshLine();
    m = reduce(m, {
      type: "sample",
      sample: mkSample(),
      feedback: [mkEvent({ state: "above", hint: "too_far" })],
    });
    m = reduce(m, {
      type: "sample",
      sample: mkSample({ frame_index: 1 }),
      feedback: [mkEvent({ state: "within", hint: "ok", onset: 0.9 })],
    });
    expect(m.widgets.ctwd.state).toBe("within");
  });
});

describe("summary", () => {
  const summaryMsg: ServerMessage = {
    type: "line_summary",
    summary: {
      shares: {
        ctwd: { within_n: 70, above_n: 20, below_n: 10 },
        travel_angle: { within_n: 100, above_n: 0, below_n: 0 },
        work_angle: { within_n: 50, above_n: 25, below_n: 25 },
        speed: { within_n: 0, above_n: 0, below_n: 0 },
      },
      smoothness: 0.4,
      accuracy_mm: 1.1,
      valid_frame_count: 100,
      excluded: false,
      exclusion_reason: null,
    },
    screening: { kind: "valid", detail: "ok" },
    drift: { flagged_indices: [3], event_spans: [[3, 3]], frame_count: 100 },
    events: [],
    cursor: { module_index: 0, line_index: 1, complete: false },
  };

  it("bars are the engine's counts, percentages their exact shares", () => {
    const m = reduce(freshLine(), summaryMsg);
    expect(m.phase).toBe("summary");
    const ctwd = m.summary!.bars.find((b) => b.parameter === "ctwd")!;
    expect(ctwd.withinN).toBe(70);
    expect(ctwd.pctWithin).toBe(70);
    expect(ctwd.pctAbove).toBe(20);
    expect(ctwd.pctBelow).toBe(10);
    expect(ctwd.pctWithin + ctwd.pctAbove + ctwd.pctBelow).toBe(100);
    const speed = m.summary!.bars.find((b) => b.parameter === "speed")!;
    expect(speed.pctWithin).toBe(0); // zero counted frames, no NaN
    expect(m.summary!.driftFlagged).toBe(true);
    expect(m.cursor).toEqual({ moduleIndex: 0, lineIndex: 1, complete: false });
  });

  it("a complete cursor finishes the lesson", () => {
    const done = {
      ...summaryMsg,
      cursor: { module_index: 2, line_index: 0, complete: true },
    } as ServerMessage;
    const m = reduce(freshLine(), done);
    expect(m.phase).toBe("done");
  });

  it("summaryView percentages always sum to 100 for counted parameters", () => {
    const view = summaryView(
      {
        shares: { ctwd: { within_n: 1, above_n: 1, below_n: 1 } },
        smoothness: null,
        accuracy_mm: null,
        valid_frame_count: 3,
        excluded: false,
        exclusion_reason: null,
      },
      { flagged_indices: [], event_spans: [], frame_count: 3 },
    );
    const bar = view.bars[0]!;
    expect(bar.pctWithin + bar.pctAbove + bar.pctBelow).toBeCloseTo(100, 9);
  });
});

describe("errors", () => {
  it("an error reply surfaces and the next message clears it", () => {
    let m = freshLine();
    m = reduce(m, {
      type: "error",
      error: "SequenceError",
      detail: "frame timestamp 0.0 not after 1.0",
    });
    expect(m.lastError?.error).toBe("SequenceError");
    expect(m.phase).toBe("welding"); // session state untouched
    m = reduce(m, { type: "sample", sample: mkSample(), feedback: [] });
    expect(m.lastError).toBeNull();
  });
});
