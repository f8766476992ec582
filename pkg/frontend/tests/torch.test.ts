import { describe, expect, it } from "vitest";

import {
  barrelAxis,
  benchBasis,
  defaultLine,
  gridToWorld,
  M_PER_INCH,
  NEUTRAL_CONTROLS,
  poseFor,
  TorchSynth,
} from "../src/torch.js";
import { add, dot, norm, rotate, scale, type Vec3 } from "../src/vec.js";
import { flatCalibration, skewCalibration } from "./fixtures.js";

const DEG = Math.PI / 180;

describe("barrel axis", () => {
  it("realizes the commanded angles on any bench", () => {
    for (const calib of [flatCalibration(), skewCalibration()]) {
      const basis = benchBasis(calib);
      for (const [travel, work, tilt] of [
        [0, 90, 1],
        [10, 75, 1],
        [-7, 80, -1],
        [30, 45, 1],
      ] as const) {
        const axis = barrelAxis(basis, travel, work, tilt);
        const up = dot(axis, basis.normal);
        const along = dot(axis, basis.weldDir);
        const lateral = dot(axis, basis.side);
        expect(Math.atan2(along, up) / DEG).toBeCloseTo(travel, 9);
        expect((90 - Math.abs(Math.atan2(lateral, up) / DEG))).toBeCloseTo(work, 9);
        // No lateral lean at 90 degrees, so the sign only exists below it.
        if (work !== 90) expect(Math.sign(lateral)).toBe(tilt);
        expect(norm(axis)).toBeCloseTo(1, 12);
      }
    }
  });

  it("rejects infeasible angles", () => {
    const basis = benchBasis(flatCalibration());
    expect(() => barrelAxis(basis, 90, 80, 1)).toThrow(/travel angle/);
    expect(() => barrelAxis(basis, 0, 0, 1)).toThrow(/work angle/);
    expect(() => barrelAxis(basis, 0, 91, 1)).toThrow(/work angle/);
  });
});

describe("pose synthesis", () => {
  it("puts the tip exactly where the controls say", () => {
    for (const calib of [flatCalibration(), skewCalibration()]) {
      const basis = benchBasis(calib);
      const state = {
        ...NEUTRAL_CONTROLS,
        u: 0.03,
        v: -0.011,
        ctwdMm: 12.5,
        travelDeg: 6,
        workDeg: 82,
      };
      const pose = poseFor(calib, state);
      // The engine recovers the tip as position + R(q) * tip_offset.
      const tip = add(pose.position, rotate(pose.orientation, calib.tip_offset.translation));
      const want = gridToWorld(basis, state.u, state.v, state.ctwdMm / 1000);
      for (let i = 0; i < 3; i += 1) expect(tip[i]).toBeCloseTo(want[i]!, 12);
      // And the barrel axis is where the mounted tool now points.
      const bodyBarrel = rotate(calib.tip_offset.rotation, [0, 0, 1]);
      const axis = rotate(pose.orientation, bodyBarrel);
      const want2 = barrelAxis(basis, state.travelDeg, state.workDeg, state.tiltSign);
      for (let i = 0; i < 3; i += 1) expect(axis[i]).toBeCloseTo(want2[i]!, 12);
    }
  });

  it("neutral controls on the flat bench give the identity orientation", () => {
    const pose = poseFor(flatCalibration(), NEUTRAL_CONTROLS);
    expect([...pose.orientation]).toEqual([1, 0, 0, 0]);
    // Tip at the grid origin +10 mm, body 10 cm above that.
    expect(pose.position[0]).toBeCloseTo(0, 12);
    expect(pose.position[1]).toBeCloseTo(0, 12);
    expect(pose.position[2]).toBeCloseTo(0.01 + 0.1, 12);
  });
});

describe("TorchSynth", () => {
  it("emits well-formed frames at a fixed rate", () => {
    const synth = new TorchSynth(skewCalibration());
    const frames = Array.from({ length: 10 }, () => synth.frame(NEUTRAL_CONTROLS));
    frames.forEach((frame, k) => {
      expect(frame.frame_index).toBe(k);
      expect(frame.timestamp).toBeCloseTo(k / 90, 12);
      expect(frame.position.every(Number.isFinite)).toBe(true);
      expect(Math.hypot(...frame.orientation)).toBeCloseTo(1, 12);
      expect(frame.audio_level).toBeNull();
    });
    for (let k = 1; k < frames.length; k += 1) {
      expect(frames[k]!.timestamp).toBeGreaterThan(frames[k - 1]!.timestamp);
    }
  });

  it("held values repeat between inputs", () => {
    const synth = new TorchSynth(flatCalibration());
    const a = synth.frame(NEUTRAL_CONTROLS);
    const b = synth.frame(NEUTRAL_CONTROLS);
    expect(b.position).toEqual(a.position);
    expect(b.orientation).toEqual(a.orientation);
    expect(b.timestamp).toBeGreaterThan(a.timestamp);
  });

  it("continues its clock across a handoff", () => {
    const first = new TorchSynth(flatCalibration());
    first.frame(NEUTRAL_CONTROLS);
    first.frame(NEUTRAL_CONTROLS);
    const second = new TorchSynth(skewCalibration(), 90, first.timestamp, first.frameIndex);
    const frame = second.frame(NEUTRAL_CONTROLS);
    expect(frame.frame_index).toBe(2);
    expect(frame.timestamp).toBeCloseTo(2 / 90, 12);
  });
});

describe("default line", () => {
  it("runs five inches along the weld axis from the grid origin", () => {
    const calib = skewCalibration();
    const basis = benchBasis(calib);
    const line = defaultLine(calib);
    expect(line.length).toBeCloseTo(5 * M_PER_INCH, 12);
    expect(line.start_point).toEqual([...basis.origin]);
    expect(line.direction).toEqual([...basis.weldDir]);
  });

  it("scales with the requested length", () => {
    const line = defaultLine(flatCalibration(), 2);
    const end = add(line.start_point as Vec3, scale(line.direction as Vec3, line.length));
    expect(end[0]).toBeCloseTo(2 * M_PER_INCH, 12);
  });
});
