/** View state as a pure function of the engine's messages.
 *
 * Widgets never reclassify: color and hint come only from the feedback
 * events the engine streamed, so the booth can't disagree with the
 * engine about what the welder did. reduce() is a pure (model, message)
 * -> model step, which keeps every screen scriptable in tests.
 */

import type {
  DriftReport,
  FeedbackEvent,
  Hint,
  LineSpec,
  Parameter,
  Plan,
  Ranges,
  RangeState,
  Sample,
  ServerMessage,
  Summary,
} from "./protocol.js";
import { PARAMETERS } from "./protocol.js";

export const HINT_LABELS: Record<Hint, string> = {
  ok: "",
  too_far: "Too far from table",
  too_close: "Too close",
  too_fast: "Too fast",
  too_slow: "Too slow",
  tilt_left: "Tilt left",
  tilt_right: "Tilt right",
  tilt_forward: "Tilt forward",
  tilt_backward: "Tilt backward",
};

export const HINT_ARROWS: Partial<Record<Hint, string>> = {
  tilt_left: "←",
  tilt_right: "→",
  tilt_forward: "↑",
  tilt_backward: "↓",
};

export interface ParamWidget {
  /** null until the engine has said anything about this parameter. */
  state: RangeState | null;
  hint: Hint | null;
  label: string;
  arrow: string | null;
}

const blankWidget = (): ParamWidget => ({ state: null, hint: null, label: "", arrow: null });

export interface SummaryBar {
  parameter: Parameter;
  withinN: number;
  aboveN: number;
  belowN: number;
  pctWithin: number;
  pctAbove: number;
  pctBelow: number;
}

export interface SummaryView {
  bars: SummaryBar[];
  excluded: boolean;
  exclusionReason: string | null;
  validFrameCount: number;
  driftFlagged: boolean;
}

export type Phase = "idle" | "between" | "welding" | "summary" | "done" | "closed";

export interface BoothModel {
  phase: Phase;
  sessionId: string | null;
  ranges: Ranges | null;
  plan: Plan | null;
  guide: LineSpec | null;
  widgets: Record<Parameter, ParamWidget>;
  badge: { module: string; n: number; total: number } | null;
  assisted: boolean;
  lastSample: Sample | null;
  summary: SummaryView | null;
  cursor: { moduleIndex: number; lineIndex: number; complete: boolean } | null;
  /** Connection lost: overlay until the socket is back. */
  paused: boolean;
  lastError: { error: string; detail: string; field?: string } | null;
}

export function initialModel(): BoothModel {
  return {
    phase: "idle",
    sessionId: null,
    ranges: null,
    plan: null,
    guide: null,
    widgets: blankWidgets(),
    badge: null,
    assisted: true,
    lastSample: null,
    summary: null,
    cursor: null,
    paused: false,
    lastError: null,
  };
}

function blankWidgets(): Record<Parameter, ParamWidget> {
  return {
    ctwd: blankWidget(),
    travel_angle: blankWidget(),
    work_angle: blankWidget(),
    speed: blankWidget(),
  };
}

function widgetFor(event: FeedbackEvent): ParamWidget {
  return {
    state: event.state,
    hint: event.hint,
    label: event.state === "within" ? "" : HINT_LABELS[event.hint],
    arrow: event.state === "within" ? null : (HINT_ARROWS[event.hint] ?? null),
  };
}

export function summaryView(summary: Summary, drift: DriftReport): SummaryView {
  const bars: SummaryBar[] = [];
  for (const parameter of PARAMETERS) {
    const share = summary.shares[parameter];
    if (!share) continue;
    const total = share.within_n + share.above_n + share.below_n;
    const pct = (n: number) => (total > 0 ? (100 * n) / total : 0);
    bars.push({
      parameter,
      withinN: share.within_n,
      aboveN: share.above_n,
      belowN: share.below_n,
      pctWithin: pct(share.within_n),
      pctAbove: pct(share.above_n),
      pctBelow: pct(share.below_n),
    });
  }
  return {
    bars,
    excluded: summary.excluded,
    exclusionReason: summary.exclusion_reason,
    validFrameCount: summary.valid_frame_count,
    driftFlagged: drift.flagged_indices.length > 0,
  };
}

/** Apply one server message; the model the renderer draws from. */
export function reduce(model: BoothModel, msg: ServerMessage): BoothModel {
  const m: BoothModel = { ...model, widgets: { ...model.widgets }, lastError: null };
  switch (msg.type) {
    case "welcome":
      m.phase = "between";
      m.sessionId = msg.session_id;
      m.ranges = msg.ranges;
      m.plan = msg.plan;
      return m;
    case "line_started": {
      m.phase = "welding";
      m.widgets = blankWidgets();
      m.summary = null;
      m.lastSample = null;
      m.assisted = msg.assisted;
      const planned = m.plan?.modules.find((mod) => mod.module === msg.module)?.lines ?? 0;
      m.badge = {
        module: msg.module,
        n: msg.line_index + 1,
        total: Math.max(planned, msg.line_index + 1),
      };
      return m;
    }
    case "sample":
      m.lastSample = msg.sample;
      for (const event of msg.feedback) {
        m.widgets[event.parameter] = widgetFor(event);
      }
      return m;
    case "recalibrated":
      return m;
    case "assist":
      return m;
    case "line_summary":
      m.phase = "summary";
      m.summary = summaryView(msg.summary, msg.drift);
      m.cursor = {
        moduleIndex: msg.cursor.module_index,
        lineIndex: msg.cursor.line_index,
        complete: msg.cursor.complete,
      };
      if (msg.cursor.complete) m.phase = "done";
      return m;
    case "bye":
      m.phase = "closed";
      return m;
    case "error":
      m.lastError = { error: msg.error, detail: msg.detail, field: msg.field };
      return m;
  }
}

export function setGuide(model: BoothModel, guide: LineSpec | null): BoothModel {
  return { ...model, guide };
}

export function setPaused(model: BoothModel, paused: boolean): BoothModel {
  return { ...model, paused };
}
