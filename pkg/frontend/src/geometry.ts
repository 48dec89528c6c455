// Client-side re-derivation of the engine's camera and tick math.
// Independent implementation of the shared formulas: the orbital pose is
// pivot + R(q)·(0,0,d) looking along local -Z, and the forward tick of an
// asset spun by R degrees is (sin R, -cos R).

export type Vec3 = [number, number, number];
export type QuatWXYZ = [number, number, number, number];

export interface CameraKeyframe {
  frame: number;
  pivot: { x: number; y: number; z: number };
  quaternion_wxyz: QuatWXYZ;
  distance: number;
  focus_distance: number | null;
}

export interface CameraTrack {
  intrinsics: {
    focal_length_mm: number;
    vertical_fov_rad: number;
    viewport_aspect: number;
    viewport_height_px: number;
  };
  keyframes: CameraKeyframe[];
  interpolation: string;
}

export function quatMatrix(q: QuatWXYZ): number[] {
  const [w, x, y, z] = q;
  return [
    1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
    2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
    2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
  ];
}

const mulMV = (m: number[], v: Vec3): Vec3 => [
  m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
  m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
  m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
];

const mulMTV = (m: number[], v: Vec3): Vec3 => [
  m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
  m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
  m[2] * v[0] + m[5] * v[1] + m[8] * v[2],
];

export function cameraPosition(pivot: Vec3, q: QuatWXYZ, distance: number): Vec3 {
  const offset = mulMV(quatMatrix(q), [0, 0, distance]);
  return [pivot[0] + offset[0], pivot[1] + offset[1], pivot[2] + offset[2]];
}

export function viewDirection(q: QuatWXYZ): Vec3 {
  const m = quatMatrix(q);
  return [-m[2], -m[5], -m[8]];
}

/** Point in camera space: R^T (p - position). Visible points have z < 0. */
export function toViewSpace(p: Vec3, pivot: Vec3, q: QuatWXYZ, distance: number): Vec3 {
  const position = cameraPosition(pivot, q, distance);
  const rel: Vec3 = [p[0] - position[0], p[1] - position[1], p[2] - position[2]];
  return mulMTV(quatMatrix(q), rel);
}

export interface Projected {
  visible: boolean;
  ndcX: number;
  ndcY: number;
}

export function project(
  p: Vec3, pivot: Vec3, q: QuatWXYZ, distance: number,
  verticalFovRad: number, aspect: number,
): Projected {
  const v = toViewSpace(p, pivot, q, distance);
  if (v[2] >= 0) return { visible: false, ndcX: 0, ndcY: 0 };
  const depth = -v[2];
  const tanV = Math.tan(verticalFovRad / 2);
  const tanH = tanV * aspect;
  return { visible: true, ndcX: v[0] / (tanH * depth), ndcY: v[1] / (tanV * depth) };
}

export function forwardVector(rotationZDeg: number): [number, number] {
  const r = (rotationZDeg * Math.PI) / 180;
  return [Math.sin(r), -Math.cos(r)];
}

/** The 8 corners of an axis-aligned box, x varying slowest then y then z. */
export function aabbCorners(min: Vec3, max: Vec3): Vec3[] {
  const out: Vec3[] = [];
  for (const cx of [min[0], max[0]])
    for (const cy of [min[1], max[1]])
      for (const cz of [min[2], max[2]]) out.push([cx, cy, cz]);
  return out;
}

/** World corners of a placed oriented box, origin at bottom center, Z spin only
 * applied the way grounded assets use it (tilts come through rarely and the
 * wireframe view treats them with the full XYZ composition). */
export function placementCorners(
  location: Vec3, rotationDeg: Vec3, dimensions: Vec3,
): Vec3[] {
  const [w, d, h] = dimensions;
  const [rx, ry, rz] = rotationDeg.map((a) => (a * Math.PI) / 180);
  const rotX = (v: Vec3): Vec3 => [
    v[0], v[1] * Math.cos(rx) - v[2] * Math.sin(rx), v[1] * Math.sin(rx) + v[2] * Math.cos(rx)];
  const rotY = (v: Vec3): Vec3 => [
    v[0] * Math.cos(ry) + v[2] * Math.sin(ry), v[1], -v[0] * Math.sin(ry) + v[2] * Math.cos(ry)];
  const rotZ = (v: Vec3): Vec3 => [
    v[0] * Math.cos(rz) - v[1] * Math.sin(rz), v[0] * Math.sin(rz) + v[1] * Math.cos(rz), v[2]];
  const out: Vec3[] = [];
  for (const sx of [-w / 2, w / 2])
    for (const sy of [-d / 2, d / 2])
      for (const sz of [0, h]) {
        const v = rotX(rotY(rotZ([sx, sy, sz])));
        out.push([v[0] + location[0], v[1] + location[1], v[2] + location[2]]);
      }
  return out;
}

/** The 12 edges of a box given its 8 corners in the fixed order above. */
export const BOX_EDGES: ReadonlyArray<[number, number]> = [
  [0, 1], [2, 3], [4, 5], [6, 7],
  [0, 2], [1, 3], [4, 6], [5, 7],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

/** Horizontal frustum wedge for the top-down view: heading of the view
 * direction in the XY plane plus the half field of view each side. */
export function frustumWedge(
  q: QuatWXYZ, verticalFovRad: number, aspect: number,
): { headingRad: number; halfRad: number } {
  const dir = viewDirection(q);
  const tanH = Math.tan(verticalFovRad / 2) * aspect;
  return { headingRad: Math.atan2(dir[1], dir[0]), halfRad: Math.atan(tanH) };
}
