// Scene views over a snapshot: a top-down plan mirroring the server's SVG
// semantics (footprints, forward ticks, frustum wedge) and a wireframe 3D
// view of world boxes plus the camera frustum, both drawn on 2D canvas from
// the client-side camera math.

import {
  BOX_EDGES,
  aabbCorners,
  cameraPosition,
  forwardVector,
  frustumWedge,
  placementCorners,
  project,
  type QuatWXYZ,
  type Vec3,
} from "./geometry.js";
import type { PlacementEntry, Snapshot } from "./protocol.js";

const SCALE = 30; // px per meter, matches the server diagrams
const PAD = 1.5;

interface TopdownPolyline {
  assetId: string | null;
  points: Array<[number, number]>;
  kind: "footprint" | "tick" | "bounds" | "frustum" | "camera";
}

/** Pure geometry for the top-down view; the canvas painter just strokes it. */
export function topdownGeometry(
  snapshot: Snapshot, selectedAssetId: string | null,
): { width: number; height: number; lines: TopdownPolyline[]; selected: string | null } {
  const size = snapshot.scene_size;
  const minX = size.x_negative;
  const maxY = size.y;
  const width = (size.x - size.x_negative + 2 * PAD) * SCALE;
  const height = (size.y - size.y_negative + 2 * PAD) * SCALE;
  const px = (x: number, y: number): [number, number] => [
    (x - minX + PAD) * SCALE,
    (maxY - y + PAD) * SCALE,
  ];

  const lines: TopdownPolyline[] = [];
  lines.push({
    assetId: null,
    kind: "bounds",
    points: [
      px(size.x_negative, size.y_negative), px(size.x, size.y_negative),
      px(size.x, size.y), px(size.x_negative, size.y),
      px(size.x_negative, size.y_negative),
    ],
  });

  for (const entry of snapshot.placements) {
    const corners = placementCorners(
      [entry.location.x, entry.location.y, entry.location.z],
      [entry.rotation.x, entry.rotation.y, entry.rotation.z],
      [entry.dimensions.width, entry.dimensions.depth, entry.dimensions.height],
    );
    // bottom quad ring: corner order is x-slow, y-mid, z-fast
    const ring = [corners[0], corners[2], corners[6], corners[4], corners[0]];
    lines.push({
      assetId: entry.asset_id,
      kind: "footprint",
      points: ring.map((c) => px(c[0], c[1])),
    });
    const [fx, fy] = forwardVector(entry.rotation.z);
    const tickLen = entry.dimensions.depth / 2 + 0.3;
    lines.push({
      assetId: entry.asset_id,
      kind: "tick",
      points: [
        px(entry.location.x, entry.location.y),
        px(entry.location.x + fx * tickLen, entry.location.y + fy * tickLen),
      ],
    });
  }

  const keyframe = snapshot.camera_track.keyframes[0];
  if (keyframe) {
    const pivot: Vec3 = [keyframe.pivot.x, keyframe.pivot.y, keyframe.pivot.z];
    const q = keyframe.quaternion_wxyz as QuatWXYZ;
    const position = cameraPosition(pivot, q, keyframe.distance);
    const wedge = frustumWedge(
      q,
      snapshot.camera_track.intrinsics.vertical_fov_rad,
      snapshot.camera_track.intrinsics.viewport_aspect,
    );
    const reach = 3;
    lines.push({ assetId: null, kind: "camera", points: [px(position[0], position[1])] });
    for (const sign of [-1, 1]) {
      const angle = wedge.headingRad + sign * wedge.halfRad;
      lines.push({
        assetId: null,
        kind: "frustum",
        points: [
          px(position[0], position[1]),
          px(position[0] + Math.cos(angle) * reach, position[1] + Math.sin(angle) * reach),
        ],
      });
    }
  }
  return { width, height, lines, selected: selectedAssetId };
}

interface WireSegment {
  assetId: string | null;
  a: [number, number];
  b: [number, number];
}

/** Project every box edge and the frustum pyramid through the shot camera. */
export function wireframeGeometry(
  snapshot: Snapshot, viewportWidth: number, viewportHeight: number,
): WireSegment[] {
  const keyframe = snapshot.camera_track.keyframes[0];
  if (!keyframe) return [];
  const pivot: Vec3 = [keyframe.pivot.x, keyframe.pivot.y, keyframe.pivot.z];
  const q = keyframe.quaternion_wxyz as QuatWXYZ;
  const fov = snapshot.camera_track.intrinsics.vertical_fov_rad;
  const aspect = snapshot.camera_track.intrinsics.viewport_aspect;

  const toScreen = (p: Vec3): [number, number] | null => {
    const projected = project(p, pivot, q, keyframe.distance, fov, aspect);
    if (!projected.visible) return null;
    return [
      ((projected.ndcX + 1) / 2) * viewportWidth,
      ((1 - projected.ndcY) / 2) * viewportHeight,
    ];
  };

  const segments: WireSegment[] = [];
  const pushEdges = (assetId: string | null, corners: Vec3[]) => {
    for (const [i, j] of BOX_EDGES) {
      const a = toScreen(corners[i]);
      const b = toScreen(corners[j]);
      if (a && b) segments.push({ assetId, a, b });
    }
  };

  for (const entry of snapshot.placements) {
    pushEdges(entry.asset_id, placementCorners(
      [entry.location.x, entry.location.y, entry.location.z],
      [entry.rotation.x, entry.rotation.y, entry.rotation.z],
      [entry.dimensions.width, entry.dimensions.depth, entry.dimensions.height],
    ));
  }
  const ground = snapshot.shell.ground;
  pushEdges(null, aabbCorners(
    [ground.min.x, ground.min.y, ground.min.z],
    [ground.max.x, ground.max.y, ground.max.z],
  ));
  return segments;
}

const FOOTPRINT_FILL = "#cfe3ff";
const FOOTPRINT_SELECTED = "#ffd9a0";

export function paintTopdown(
  canvas: HTMLCanvasElement, snapshot: Snapshot, selectedAssetId: string | null,
): void {
  const geometry = topdownGeometry(snapshot, selectedAssetId);
  canvas.width = geometry.width;
  canvas.height = geometry.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, geometry.width, geometry.height);
  for (const line of geometry.lines) {
    ctx.beginPath();
    if (line.kind === "camera") {
      ctx.fillStyle = "#363";
      ctx.arc(line.points[0][0], line.points[0][1], 4, 0, Math.PI * 2);
      ctx.fill();
      continue;
    }
    line.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    if (line.kind === "footprint") {
      ctx.fillStyle = line.assetId === geometry.selected ? FOOTPRINT_SELECTED : FOOTPRINT_FILL;
      ctx.fill();
      ctx.strokeStyle = "#335";
    } else if (line.kind === "tick") {
      ctx.strokeStyle = "#c33";
      ctx.lineWidth = 2;
    } else if (line.kind === "frustum") {
      ctx.strokeStyle = "#363";
      ctx.setLineDash([3, 3]);
    } else {
      ctx.strokeStyle = "#888";
      ctx.setLineDash([6, 4]);
    }
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.lineWidth = 1;
  }
}

export function paintWireframe(canvas: HTMLCanvasElement, snapshot: Snapshot,
                               selectedAssetId: string | null): void {
  const width = canvas.width || 960;
  const height = canvas.height || 540;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, width, height);
  for (const segment of wireframeGeometry(snapshot, width, height)) {
    ctx.beginPath();
    ctx.moveTo(segment.a[0], segment.a[1]);
    ctx.lineTo(segment.b[0], segment.b[1]);
    ctx.strokeStyle = segment.assetId === null
      ? "#2a4d2a"
      : segment.assetId === selectedAssetId ? "#ffd9a0" : "#9cc3ff";
    ctx.stroke();
  }
}

/** The asset under a top-down canvas click, for drag selection. */
export function hitTest(snapshot: Snapshot, canvasX: number, canvasY: number): string | null {
  const size = snapshot.scene_size;
  const worldX = canvasX / SCALE + size.x_negative - PAD;
  const worldY = size.y + PAD - canvasY / SCALE;
  let best: { id: string; distance: number } | null = null;
  for (const entry of snapshot.placements) {
    const dx = worldX - entry.location.x;
    const dy = worldY - entry.location.y;
    const reach = Math.max(entry.dimensions.width, entry.dimensions.depth) / 2 + 0.2;
    const distance = Math.hypot(dx, dy);
    if (distance <= reach && (!best || distance < best.distance)) {
      best = { id: entry.asset_id, distance };
    }
  }
  return best ? best.id : null;
}

export function canvasToWorld(
  snapshot: Snapshot, canvasX: number, canvasY: number,
): { x: number; y: number } {
  const size = snapshot.scene_size;
  return {
    x: canvasX / SCALE + size.x_negative - PAD,
    y: size.y + PAD - canvasY / SCALE,
  };
}

export function placementById(snapshot: Snapshot, assetId: string): PlacementEntry | undefined {
  return snapshot.placements.find((p) => p.asset_id === assetId);
}
