// Thin client for the editing service: structured edits with optimistic
// versioning, snapshot pulls, and the server-push event stream.

import type { CameraTrack, Vec3 } from "./geometry.js";

export interface PlacementEntry {
  asset_id: string;
  asset_type: string;
  location: { x: number; y: number; z: number };
  rotation: { x: number; y: number; z: number };
  dimensions: { width: number; depth: number; height: number };
}

export interface Diagnostic {
  kind: string;
  asset_id: string;
  anchor_id: string | null;
  measured: number;
  unit: string;
  budget: number;
  detail: string;
}

export interface Snapshot {
  scene_id: number;
  shot_id: number;
  scene_type: string;
  scene_size: { x: number; x_negative: number; y: number; y_negative: number };
  placements: PlacementEntry[];
  shell: {
    ground: { min: Record<string, number>; max: Record<string, number> };
    walls: Record<string, { min: Record<string, number>; max: Record<string, number> }>;
  };
  camera_instruction: { focus_on_ids: string[]; movement: string };
  camera_track: CameraTrack;
}

export type Edit =
  | { kind: "servo_command"; payload: { op: string; magnitude?: number } }
  | { kind: "set_placement"; payload: { asset_id: string; location?: Record<string, number>; rotation?: Record<string, number> } }
  | { kind: "undo"; payload: Record<string, never> };

export interface EditResult {
  accepted: boolean;
  version: number;
  changed_ids: string[];
  diagnostics: Diagnostic[];
}

export interface SessionInfo {
  session_id: string;
  version: number;
  cursor: { scene_id: number; shot_id: number };
}

export class StaleVersionError extends Error {
  constructor(public actualVersion: number) {
    super(`session moved on to version ${actualVersion}`);
  }
}

export class ServiceClient {
  constructor(private baseUrl: string) {}

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await response.json();
    if (response.status === 409) throw new StaleVersionError(data.details.actual_version);
    if (!response.ok) throw new Error(`${data.code}: ${data.message}`);
    return data as T;
  }

  openSession(sceneId: number, shotId: number): Promise<SessionInfo> {
    return this.json("POST", "/sessions", {
      cursor: { scene_id: sceneId, shot_id: shotId },
    });
  }

  postEdit(sessionId: string, edit: Edit, expectedVersion: number): Promise<EditResult> {
    return this.json("POST", `/sessions/${sessionId}/edits`, {
      edit,
      expected_version: expectedVersion,
    });
  }

  fetchSnapshot(sessionId: string): Promise<Snapshot> {
    return this.json("GET", `/sessions/${sessionId}/state?detail=snapshot`);
  }

  fetchSummary(sessionId: string): Promise<{ version: number }> {
    return this.json("GET", `/sessions/${sessionId}/state?detail=summary`);
  }

  subscribeEvents(
    sessionId: string,
    onEvent: (event: { version: number; changed_ids: string[] }) => void,
  ): EventSource {
    const source = new EventSource(`${this.baseUrl}/sessions/${sessionId}/events`);
    source.onmessage = (message) => onEvent(JSON.parse(message.data));
    return source;
  }
}

/** Parse one server-sent-events chunk into data payloads (exported for tests). */
export function parseSseChunk(chunk: string): string[] {
  return chunk
    .split("\n")
    .filter((line) => line.startsWith("data: "))
    .map((line) => line.slice("data: ".length));
}

export function placementLocation(entry: PlacementEntry): Vec3 {
  return [entry.location.x, entry.location.y, entry.location.z];
}
