/** Playback of stored session logs: scrub anywhere, play at any rate.
 *
 * Display only. The widgets shown at a scrub point are the engine's own
 * recorded events up to that instant; changing the playback rate only
 * rescales presentation time, never the order of what is shown.
 */

import type { FeedbackEvent, LineRecord, Parameter, SessionLog } from "./protocol.js";
import { PARAMETERS, sessionLogSchema } from "./protocol.js";
import type { ParamWidget } from "./widgets.js";
import { HINT_ARROWS, HINT_LABELS } from "./widgets.js";

/** Schema problems are surfaced verbatim so logs can be fixed by hand. */
export function parseSessionLog(text: string): SessionLog {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new Error(`not valid JSON: ${(e as Error).message}`);
  }
  const result = sessionLogSchema.safeParse(doc);
  if (!result.success) {
    const first = result.error.issues[0]!;
    throw new Error(`${first.path.join(".")}: ${first.message}`);
  }
  return result.data;
}

export interface ReplayView {
  widgets: Record<Parameter, ParamWidget>;
  driftBadge: boolean;
  sampleIndex: number | null;
}

function widgetAt(events: FeedbackEvent[], parameter: Parameter, t: number): ParamWidget {
  let last: FeedbackEvent | null = null;
  for (const event of events) {
    if (event.parameter !== parameter) continue;
    if (event.onset <= t && (last === null || event.onset >= last.onset)) last = event;
  }
  if (last === null) return { state: null, hint: null, label: "", arrow: null };
  return {
    state: last.state,
    hint: last.hint,
    label: last.state === "within" ? "" : HINT_LABELS[last.hint],
    arrow: last.state === "within" ? null : (HINT_ARROWS[last.hint] ?? null),
  };
}

export class ReplayModel {
  constructor(readonly log: SessionLog) {}

  get lineCount(): number {
    return this.log.lines.length;
  }

  line(index: number): LineRecord {
    const rec = this.log.lines[index];
    if (!rec) throw new Error(`no line ${index} in a ${this.lineCount}-line session`);
    return rec;
  }

  /** [start, end] timestamps of a line's sample stream. */
  span(index: number): [number, number] {
    const samples = this.line(index).samples;
    if (samples.length === 0) return [0, 0];
    return [samples[0]!.timestamp, samples[samples.length - 1]!.timestamp];
  }

  /** What the booth would have shown at time t within line `index`. */
  viewAt(index: number, t: number): ReplayView {
    const rec = this.line(index);
    const widgets = {} as Record<Parameter, ParamWidget>;
    for (const parameter of PARAMETERS) {
      widgets[parameter] = widgetAt(rec.events, parameter, t);
    }
    let sampleIndex: number | null = null;
    for (let i = 0; i < rec.samples.length; i += 1) {
      if (rec.samples[i]!.timestamp <= t) sampleIndex = i;
      else break;
    }
    let driftBadge = false;
    if (sampleIndex !== null) {
      driftBadge = rec.samples[sampleIndex]!.drift_flag;
      for (const [lo, hi] of rec.drift.event_spans) {
        if (sampleIndex >= lo && sampleIndex <= hi) driftBadge = true;
      }
    }
    return { widgets, driftBadge, sampleIndex };
  }

  /** Presentation schedule for one line; rate scales times, not order. */
  schedule(index: number, rate = 1): { atMs: number; event: FeedbackEvent }[] {
    if (rate <= 0) throw new Error("playback rate must be positive");
    const rec = this.line(index);
    const [start] = this.span(index);
    return [...rec.events]
      .sort((a, b) => a.onset - b.onset || a.parameter.localeCompare(b.parameter))
      .map((event) => ({ atMs: ((event.onset - start) * 1000) / rate, event }));
  }
}
