/** Pointer/keyboard bindings standing in for a tracked torch.
 *
 * Pointer position steers the tip across the coupon plane; key pairs
 * nudge the torch angles one degree per press; the wheel (or R/F) moves
 * CTWD one millimetre per step; holding the pointer button or the space
 * bar keeps the trigger down. Fidelity to real hand motion is not a
 * goal, determinism is: the same input script always yields the same
 * frame stream.
 */

import type { ControlState } from "./torch.js";
import { NEUTRAL_CONTROLS, TorchSynth, FRAME_RATE } from "./torch.js";
import type { FrameData } from "./protocol.js";

export const CTWD_STEP_MM = 1;
export const ANGLE_STEP_DEG = 1;

// Clamps keep every synthesized pose inside the engine's feasible cone.
const CTWD_LIMITS_MM: [number, number] = [0, 40];
const TRAVEL_LIMITS_DEG: [number, number] = [-45, 45];
const WORK_LIMITS_DEG: [number, number] = [30, 90];

const clamp = (v: number, [lo, hi]: [number, number]) => Math.min(hi, Math.max(lo, v));

export type ControlAction =
  | { kind: "pointer"; u: number; v: number }
  | { kind: "key"; key: string }
  | { kind: "wheel"; deltaY: number }
  | { kind: "trigger"; down: boolean }
  | { kind: "set"; patch: Partial<ControlState> };

/** Holds the live control state; every mutation goes through apply(). */
export class ControlRig {
  private state: ControlState = { ...NEUTRAL_CONTROLS };

  snapshot(): ControlState {
    return { ...this.state };
  }

  apply(action: ControlAction): void {
    const s = this.state;
    switch (action.kind) {
      case "pointer":
        s.u = action.u;
        s.v = action.v;
        break;
      case "key":
        this.key(action.key);
        break;
      case "wheel":
        s.ctwdMm = clamp(s.ctwdMm + Math.sign(action.deltaY) * CTWD_STEP_MM, CTWD_LIMITS_MM);
        break;
      case "trigger":
        s.triggerDown = action.down;
        break;
      case "set":
        Object.assign(s, action.patch);
        s.ctwdMm = clamp(s.ctwdMm, CTWD_LIMITS_MM);
        s.travelDeg = clamp(s.travelDeg, TRAVEL_LIMITS_DEG);
        s.workDeg = clamp(s.workDeg, WORK_LIMITS_DEG);
        break;
    }
  }

  private key(key: string): void {
    const s = this.state;
    switch (key) {
      case "a": // drag
        s.travelDeg = clamp(s.travelDeg - ANGLE_STEP_DEG, TRAVEL_LIMITS_DEG);
        break;
      case "d": // push
        s.travelDeg = clamp(s.travelDeg + ANGLE_STEP_DEG, TRAVEL_LIMITS_DEG);
        break;
      case "s": // lean further over
        s.workDeg = clamp(s.workDeg - ANGLE_STEP_DEG, WORK_LIMITS_DEG);
        break;
      case "w": // back toward perpendicular
        s.workDeg = clamp(s.workDeg + ANGLE_STEP_DEG, WORK_LIMITS_DEG);
        break;
      case "f": // closer to the plate
        s.ctwdMm = clamp(s.ctwdMm - CTWD_STEP_MM, CTWD_LIMITS_MM);
        break;
      case "r": // further from the plate
        s.ctwdMm = clamp(s.ctwdMm + CTWD_STEP_MM, CTWD_LIMITS_MM);
        break;
      case "x": // flip lateral tilt side
        s.tiltSign = s.tiltSign === 1 ? -1 : 1;
        break;
    }
  }
}

/** Maps canvas pixels to coupon-plane grid coordinates and back. */
export class CouponView {
  constructor(
    readonly widthPx: number,
    readonly heightPx: number,
    /** Metres of coupon plane shown across the canvas width. */
    readonly spanM = 0.2,
  ) {}

  get pxPerM(): number {
    return this.widthPx / this.spanM;
  }

  toGrid(xPx: number, yPx: number): { u: number; v: number } {
    // Canvas y grows downward; grid v grows to the welder's left.
    return {
      u: (xPx - this.widthPx / 2) / this.pxPerM,
      v: (this.heightPx / 2 - yPx) / this.pxPerM,
    };
  }

  toPx(u: number, v: number): { x: number; y: number } {
    return {
      x: this.widthPx / 2 + u * this.pxPerM,
      y: this.heightPx / 2 - v * this.pxPerM,
    };
  }
}

export interface ScriptedAction {
  atMs: number;
  action: ControlAction;
}

/** Replay an input script at the synthesis rate; pure and deterministic. */
export function runScript(
  script: ScriptedAction[],
  synth: TorchSynth,
  durationMs: number,
  rig = new ControlRig(),
): FrameData[] {
  const ordered = [...script].sort((a, b) => a.atMs - b.atMs);
  const frames: FrameData[] = [];
  const stepMs = 1000 / FRAME_RATE;
  let next = 0;
  for (let tMs = 0; tMs <= durationMs; tMs += stepMs) {
    while (next < ordered.length && ordered[next]!.atMs <= tMs) {
      rig.apply(ordered[next]!.action);
      next += 1;
    }
    frames.push(synth.frame(rig.snapshot()));
  }
  return frames;
}
