/**
 * Wire types for the engine's WebSocket JSON mirror.
 *
 * One JSON object per interaction going up, and three message shapes coming
 * down: a full state snapshot (sent on connect, after every applied event,
 * and in reply to "hello"), a notify echo of the OSC state address space,
 * and an error reply that only the offending sender sees. PROTOCOL.md in
 * the repository root documents the same shapes with byte-level examples.
 */

export interface AttributeInfo {
  id: string;
  name: string;
  low: string;       // scale endpoint shown at the bottom of the slider
  high: string;
  description: string;
}

export interface Snapshot {
  type: "state";
  assessor: string;
  phase: "familiarization" | "rating" | "finished";
  trial: number;
  n_trials: number;
  labels: string[];                            // blinded, e.g. ["A","B","C","D"]
  reference_label: string;                     // always playable, never rated
  attributes: AttributeInfo[];
  ratings: Record<string, Record<string, number>>;   // attribute -> label -> value
  missing: string[];                           // "attribute/label" cells still unrated
  seat: string | null;
  seats: string[];
  sources: number;
  transport: "playing" | "stopped";
  stimulus: string | null;
}

export interface Notify {
  type: "notify";
  address: string;
  args: (string | number)[];
}

export interface ErrorReply {
  type: "error";
  error: string;
  message: string;
  missing?: string[];
}

export type ServerMessage = Snapshot | Notify | ErrorReply;

export type ClientEvent =
  | { type: "hello" }
  | { type: "seat"; id: string }
  | { type: "pose"; orientation: [number, number, number, number];
      position?: [number, number, number] }
  | { type: "play"; label: string }
  | { type: "stop" }
  | { type: "rating"; attribute: string; label: string; value: number }
  | { type: "source"; spec: string }
  | { type: "next" }
  | { type: "info"; attribute: string };

/** Parse one frame off the socket; null for anything that is not ours. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as { type?: unknown };
  if (msg.type === "state" || msg.type === "notify" || msg.type === "error") {
    return data as ServerMessage;
  }
  return null;
}

/** Rated value of one cell, or null while the cell is untouched. */
export function cellValue(snap: Snapshot, attribute: string, label: string): number | null {
  const v = snap.ratings[attribute]?.[label];
  return typeof v === "number" ? v : null;
}

/** Yaw-only orientation as the engine's [w, x, y, z] quaternion (z up). */
export function yawQuaternion(yawRadians: number): [number, number, number, number] {
  return [Math.cos(yawRadians / 2), 0, 0, Math.sin(yawRadians / 2)];
}
