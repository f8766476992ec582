/** Wire and file contracts for the session service.
 *
 * Mirrors docs/protocol.md and docs/schema.md from the engine package;
 * this module is the only place those shapes are spelled out. Required
 * float fields arrive as `null` when the engine holds NaN (strict JSON
 * has no NaN), so they decode to NaN here; genuinely optional floats
 * keep `null`.
 */

import { z } from "zod";

export const PARAMETERS = ["ctwd", "travel_angle", "work_angle", "speed"] as const;
export type Parameter = (typeof PARAMETERS)[number];

export type RangeState = "within" | "below" | "above";
// "ok" rides on within-state events; the rest are corrections.
export type Hint =
  | "ok"
  | "too_far"
  | "too_close"
  | "too_fast"
  | "too_slow"
  | "tilt_left"
  | "tilt_right"
  | "tilt_forward"
  | "tilt_backward";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);
const vec4 = z.tuple([z.number(), z.number(), z.number(), z.number()]);
const pair = z.tuple([z.number(), z.number()]);

// null encodes NaN for fields the engine always carries
const nanFloat = z
  .union([z.number(), z.null()])
  .transform((v) => (v === null ? Number.NaN : v));
const optFloat = z.union([z.number(), z.null()]);

const parameter = z.enum(PARAMETERS);
const rangeState = z.enum(["within", "below", "above"]);
const hint = z.enum([
  "ok",
  "too_far",
  "too_close",
  "too_fast",
  "too_slow",
  "tilt_left",
  "tilt_right",
  "tilt_forward",
  "tilt_backward",
]);

export const calibrationSchema = z.object({
  grid_plane: z.object({ point: vec3, normal: vec3 }),
  weld_direction: vec3,
  tip_offset: z.object({ translation: vec3, rotation: vec4 }),
  anchor_position: vec3.nullable(),
  anchor_orientation: vec4.nullable(),
});
export type Calibration = z.infer<typeof calibrationSchema>;

export const rangesSchema = z.object({
  ctwd_mm: pair,
  travel_angle_deg: pair,
  work_angle_deg: pair,
  speed_ipm: pair,
});
export type Ranges = z.infer<typeof rangesSchema>;

export const planSchema = z.object({
  modules: z.array(
    z.object({
      module: z.string(),
      lines: z.number().int(),
      assisted: z.boolean(),
      tracked: z.array(parameter),
    }),
  ),
  pass_threshold: z.number(),
  retry_factor: z.number(),
});
export type Plan = z.infer<typeof planSchema>;

export const lineSpecSchema = z.object({
  start_point: vec3,
  direction: vec3,
  length: z.number(),
});
export type LineSpec = z.infer<typeof lineSpecSchema>;

export const sampleSchema = z.object({
  timestamp: z.number(),
  frame_index: z.number().int(),
  ctwd: nanFloat,
  travel_angle: nanFloat,
  work_angle: nanFloat,
  work_tilt: nanFloat,
  tip_u: nanFloat,
  tip_v: nanFloat,
  raw_speed: nanFloat,
  kalman_speed: nanFloat,
  speed: optFloat,
  speed_signed: optFloat,
  valid: z.boolean(),
  drift_flag: z.boolean(),
});
export type Sample = z.infer<typeof sampleSchema>;

export const eventSchema = z.object({
  parameter,
  state: rangeState,
  hint,
  onset: z.number(),
  offset: optFloat,
});
export type FeedbackEvent = z.infer<typeof eventSchema>;

export const summarySchema = z.object({
  shares: z.record(
    parameter,
    z.object({
      within_n: z.number().int(),
      above_n: z.number().int(),
      below_n: z.number().int(),
    }),
  ),
  smoothness: optFloat,
  accuracy_mm: optFloat,
  valid_frame_count: z.number().int(),
  excluded: z.boolean(),
  exclusion_reason: z.string().nullable(),
});
export type Summary = z.infer<typeof summarySchema>;

export const screeningSchema = z.object({ kind: z.string(), detail: z.string() });
export const driftSchema = z.object({
  flagged_indices: z.array(z.number().int()),
  event_spans: z.array(z.tuple([z.number().int(), z.number().int()])),
  frame_count: z.number().int(),
});
export type DriftReport = z.infer<typeof driftSchema>;

// ---------------------------------------------------------------------------
// Server replies (exactly one per client message)

export const serverMessageSchema = z.discriminatedUnion("type", [
  z.object({
    type: z.literal("welcome"),
    session_id: z.string(),
    ranges: rangesSchema,
    plan: planSchema,
    calibration: calibrationSchema,
  }),
  z.object({
    type: z.literal("line_started"),
    module: z.string(),
    line_index: z.number().int(),
    assisted: z.boolean(),
    tracked: z.array(parameter),
  }),
  z.object({
    type: z.literal("sample"),
    sample: sampleSchema,
    feedback: z.array(eventSchema),
  }),
  z.object({ type: z.literal("recalibrated"), calibration: calibrationSchema }),
  z.object({ type: z.literal("assist"), assisted: z.boolean().nullable() }),
  z.object({
    type: z.literal("line_summary"),
    summary: summarySchema,
    screening: screeningSchema,
    drift: driftSchema,
    events: z.array(eventSchema),
    cursor: z.object({
      module_index: z.number().int(),
      line_index: z.number().int(),
      complete: z.boolean(),
    }),
  }),
  z.object({ type: z.literal("bye") }),
  z.object({
    type: z.literal("error"),
    error: z.string(),
    detail: z.string(),
    field: z.string().optional(),
  }),
]);
export type ServerMessage = z.infer<typeof serverMessageSchema>;

export function parseServerMessage(text: string): ServerMessage {
  return serverMessageSchema.parse(JSON.parse(text));
}

// ---------------------------------------------------------------------------
// Client messages

export interface FrameData {
  timestamp: number;
  frame_index: number;
  position: [number, number, number];
  orientation: [number, number, number, number];
  trigger_down: boolean;
  audio_level: number | null;
  tracking_confidence: number | null;
}

export const hello = (participant: string, sequence: string, condition: string) =>
  JSON.stringify({ type: "hello", participant, sequence, condition });

export const startLine = (lineSpec?: LineSpec) =>
  JSON.stringify(
    lineSpec === undefined
      ? { type: "start_line" }
      : { type: "start_line", line_spec: lineSpec },
  );

export const frameMessage = (frame: FrameData) =>
  JSON.stringify({ type: "frame", frame });

export const tap = (frame: FrameData, knownPoint: [number, number, number]) =>
  JSON.stringify({ type: "tap", frame, known_point: knownPoint });

export const setAssist = (assisted: boolean | null) =>
  JSON.stringify({ type: "set_assist", assisted });

export const endLine = () => JSON.stringify({ type: "end_line" });
export const bye = () => JSON.stringify({ type: "bye" });

// ---------------------------------------------------------------------------
// Session log files (replay input)

export const lineRecordSchema = z.object({
  module: z.string(),
  line_index: z.number().int(),
  assisted: z.boolean(),
  tracked: z.array(parameter),
  calibration: calibrationSchema,
  line_spec: lineSpecSchema.nullable(),
  frames: z.array(z.unknown()),
  samples: z.array(sampleSchema),
  events: z.array(eventSchema),
  summary: summarySchema,
  screening: screeningSchema,
  drift: driftSchema,
  completed: z.boolean(),
});
export type LineRecord = z.infer<typeof lineRecordSchema>;

export const sessionLogSchema = z.object({
  schema: z.literal("1"),
  header: z.object({
    participant: z.string(),
    sequence: z.string(),
    condition: z.string(),
    started_at: z.number(),
  }),
  ranges: rangesSchema,
  calibration: calibrationSchema,
  lesson: z.object({
    plan: planSchema,
    module_index: z.number().int(),
    line_index: z.number().int(),
    extra_lines: z.array(z.number().int()),
    summaries: z.array(z.array(summarySchema)),
    complete: z.boolean(),
  }),
  lines: z.array(lineRecordSchema),
});
export type SessionLog = z.infer<typeof sessionLogSchema>;
