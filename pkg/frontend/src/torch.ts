/** Desk-scale torch: turns held control values into a 90 Hz pose stream.
 *
 * The virtual torch tip sits at grid coordinates (u, v) on the coupon
 * plane at the commanded CTWD; travel and work angles tilt the barrel
 * axis off the plane normal. The synthesized frame carries the tracked
 * BODY pose, so the tip offset from the calibration is subtracted out
 * exactly the way the engine adds it back.
 */

import type { Calibration, FrameData, LineSpec } from "./protocol.js";
import {
  add,
  cross,
  fromTwoVectors,
  normalize,
  rotate,
  scale,
  sub,
  Z_AXIS,
  type Quat,
  type Vec3,
} from "./vec.js";

export const FRAME_RATE = 90;
export const M_PER_INCH = 0.0254;

export interface ControlState {
  /** Tip position on the coupon plane, metres along the weld/side axes. */
  u: number;
  v: number;
  ctwdMm: number;
  travelDeg: number;
  workDeg: number;
  tiltSign: 1 | -1;
  triggerDown: boolean;
}

export const NEUTRAL_CONTROLS: ControlState = {
  u: 0,
  v: 0,
  ctwdMm: 10,
  travelDeg: 0,
  workDeg: 90,
  tiltSign: 1,
  triggerDown: false,
};

export interface BenchBasis {
  origin: Vec3;
  weldDir: Vec3;
  side: Vec3;
  normal: Vec3;
}

export function benchBasis(calib: Calibration): BenchBasis {
  const normal = normalize(calib.grid_plane.normal);
  const weldDir = normalize(calib.weld_direction);
  return {
    origin: calib.grid_plane.point,
    weldDir,
    side: cross(normal, weldDir),
    normal,
  };
}

/** World barrel axis for the commanded travel/work angles. */
export function barrelAxis(
  basis: BenchBasis,
  travelDeg: number,
  workDeg: number,
  tiltSign: 1 | -1,
): Vec3 {
  if (!(travelDeg > -90 && travelDeg < 90)) {
    throw new Error("travel angle must be strictly inside (-90, 90) degrees");
  }
  if (!(workDeg > 0 && workDeg <= 90)) {
    throw new Error("work angle must be in (0, 90] degrees");
  }
  const phi = ((90 - workDeg) * Math.PI) / 180 * tiltSign;
  const theta = (travelDeg * Math.PI) / 180;
  return normalize(
    add(add(scale(basis.weldDir, Math.tan(theta)), scale(basis.side, Math.tan(phi))), basis.normal),
  );
}

export function gridToWorld(basis: BenchBasis, u: number, v: number, h: number): Vec3 {
  return add(
    add(add(basis.origin, scale(basis.weldDir, u)), scale(basis.side, v)),
    scale(basis.normal, h),
  );
}

/** The booth's default practice line: 5 inches along the weld axis from the grid origin. */
export function defaultLine(calib: Calibration, lengthIn = 5): LineSpec {
  const basis = benchBasis(calib);
  return {
    start_point: [...basis.origin] as [number, number, number],
    direction: [...basis.weldDir] as [number, number, number],
    length: lengthIn * M_PER_INCH,
  };
}

export interface TorchPose {
  position: Vec3;
  orientation: Quat;
}

export function poseFor(calib: Calibration, state: ControlState): TorchPose {
  const basis = benchBasis(calib);
  const axis = barrelAxis(basis, state.travelDeg, state.workDeg, state.tiltSign);
  const q = fromTwoVectors(rotate(calib.tip_offset.rotation, Z_AXIS), axis);
  const offsetWorld = rotate(q, calib.tip_offset.translation);
  const tip = gridToWorld(basis, state.u, state.v, state.ctwdMm / 1000);
  return { position: sub(tip, offsetWorld), orientation: q };
}

/** Fixed-rate frame source; held control values repeat between inputs. */
export class TorchSynth {
  private readonly calib: Calibration;
  private readonly dt: number;
  private index: number;
  private time: number;

  constructor(calib: Calibration, frameRate = FRAME_RATE, startTime = 0, startIndex = 0) {
    if (frameRate <= 0) throw new Error("frame rate must be positive");
    this.calib = calib;
    this.dt = 1 / frameRate;
    this.time = startTime;
    this.index = startIndex;
  }

  get frameIndex(): number {
    return this.index;
  }

  get timestamp(): number {
    return this.time;
  }

  /** One well-formed frame from the current controls; advances the clock. */
  frame(state: ControlState): FrameData {
    const pose = poseFor(this.calib, state);
    const out: FrameData = {
      timestamp: this.time,
      frame_index: this.index,
      position: [...pose.position] as [number, number, number],
      orientation: [...pose.orientation] as [number, number, number, number],
      trigger_down: state.triggerDown,
      audio_level: null,
      tracking_confidence: null,
    };
    this.index += 1;
    this.time += this.dt;
    return out;
  }
}
