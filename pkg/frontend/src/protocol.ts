// Wire shapes shared with the gateway: envelopes stream in as JSON text,
// commands go out as {kind, target_ns}.

export interface Envelope {
  key: string;
  sender_id: string;
  seq: number;
  timestamp_ns: number;
  payload: unknown;
}

export type CommandKind = "DROPOFF" | "PARK" | "RETRIEVE";

export interface OutboundCommand {
  kind: CommandKind;
  target_ns: string;
}

export interface PoseEntry {
  ns: string;
  x: number;
  y: number;
  yaw: number;
  len: number;
  wid: number;
}

export interface StatusPayload {
  state: string;
  seq: number;
  failed?: boolean;
}

export interface OccupancyPayload {
  frame_seq: number;
  occupied: number[];
  available: number[];
}

export interface RectDoc {
  cx: number;
  cy: number;
  hx: number;
  hy: number;
  yaw: number;
}

export interface SpotDoc extends RectDoc {
  id: number;
}

export interface MapDoc {
  spots: SpotDoc[];
  dropoff_bay: RectDoc;
  pickup_bay: RectDoc;
  waypoints: { nodes: { id: number; x: number; y: number }[] };
}

export function isEnvelope(value: unknown): value is Envelope {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    typeof v.key === "string" &&
    typeof v.sender_id === "string" &&
    typeof v.seq === "number" &&
    "payload" in v
  );
}

export function parseEnvelope(text: string): Envelope | null {
  try {
    const obj = JSON.parse(text);
    return isEnvelope(obj) ? obj : null;
  } catch {
    return null;
  }
}
