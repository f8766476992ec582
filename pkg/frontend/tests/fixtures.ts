import type { Calibration, Ranges, Plan } from "../src/protocol.js";
import { fromAxisAngle, normalize, type Vec3 } from "../src/vec.js";

/** Flat bench: plane through the origin, weld axis along x, tip 10 cm down the barrel. */
export function flatCalibration(): Calibration {
  return {
    grid_plane: { point: [0, 0, 0], normal: [0, 0, 1] },
    weld_direction: [1, 0, 0],
    tip_offset: { translation: [0, 0, -0.1], rotation: [1, 0, 0, 0] },
    anchor_position: null,
    anchor_orientation: null,
  };
}

/** A tilted, shifted bench with a rotated tool mount; nothing axis-aligned. */
export function skewCalibration(): Calibration {
  const normal = normalize([0.12, -0.2, 0.97] as Vec3);
  // Any in-plane unit vector works as the weld axis.
  const raw: Vec3 = [1, 0.3, 0];
  const along = raw[0] * normal[0] + raw[1] * normal[1] + raw[2] * normal[2];
  const weld = normalize([
    raw[0] - along * normal[0],
    raw[1] - along * normal[1],
    raw[2] - along * normal[2],
  ] as Vec3);
  return {
    grid_plane: { point: [0.31, -0.08, 0.92], normal: [...normal] as [number, number, number] },
    weld_direction: [...weld] as [number, number, number],
    tip_offset: {
      translation: [0.01, -0.02, -0.11],
      rotation: [...fromAxisAngle([0, 1, 0], 0.25)] as [number, number, number, number],
    },
    anchor_position: null,
    anchor_orientation: null,
  };
}

export function defaultRanges(): Ranges {
  return {
    ctwd_mm: [6, 15],
    travel_angle_deg: [-10, 10],
    work_angle_deg: [75, 90],
    speed_ipm: [15, 25],
  };
}

export function twoModulePlan(): Plan {
  return {
    modules: [
      { module: "ctwd", lines: 2, assisted: true, tracked: ["ctwd"] },
      { module: "test", lines: 1, assisted: false, tracked: [] },
    ],
    pass_threshold: 0.7,
    retry_factor: 1,
  };
}
