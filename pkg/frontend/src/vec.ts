/** Minimal 3-vector and quaternion helpers (scalar-first w,x,y,z, right-handed). */

export type Vec3 = readonly [number, number, number];
export type Quat = readonly [number, number, number, number];

export const Z_AXIS: Vec3 = [0, 0, 1];
export const Q_IDENTITY: Quat = [1, 0, 0, 0];

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  if (n === 0) throw new Error("cannot normalize a zero vector");
  return [a[0] / n, a[1] / n, a[2] / n];
}

/** Rotate v by unit quaternion q. */
export function rotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  return [
    (1 - 2 * (y * y + z * z)) * vx + 2 * (x * y - w * z) * vy + 2 * (x * z + w * y) * vz,
    2 * (x * y + w * z) * vx + (1 - 2 * (x * x + z * z)) * vy + 2 * (y * z - w * x) * vz,
    2 * (x * z - w * y) * vx + 2 * (y * z + w * x) * vy + (1 - 2 * (x * x + y * y)) * vz,
  ];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (n === 0) throw new Error("cannot normalize a zero quaternion");
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function fromAxisAngle(axis: Vec3, angleRad: number): Quat {
  const u = normalize(axis);
  const half = 0.5 * angleRad;
  const s = Math.sin(half);
  return [Math.cos(half), s * u[0], s * u[1], s * u[2]];
}

/** Shortest-arc rotation taking direction a to direction b. */
export function fromTwoVectors(a: Vec3, b: Vec3): Quat {
  const ua = normalize(a);
  const ub = normalize(b);
  const d = dot(ua, ub);
  if (d > 1 - 1e-12) return Q_IDENTITY;
  if (d < -1 + 1e-12) {
    const helper: Vec3 = Math.abs(ua[0]) < 0.9 ? [1, 0, 0] : [0, 1, 0];
    return fromAxisAngle(cross(ua, helper), Math.PI);
  }
  const axis = cross(ua, ub);
  return quatNormalize([1 + d, axis[0], axis[1], axis[2]]);
}
