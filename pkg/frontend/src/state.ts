// Panel snapshot: a pure fold over inbound envelopes. Nothing here is ever
// extrapolated client-side; every field mirrors the last bus value, which is
// what makes display fidelity testable by injecting a scripted sequence.

import type { Envelope, OccupancyPayload, PoseEntry, StatusPayload } from "./protocol.js";

export interface VehicleView {
  ns: string;
  state: string;
  statusSeq: number;
  failed: boolean;
  pose?: { x: number; y: number; yaw: number; len: number; wid: number };
}

export interface PanelSnapshot {
  vehicles: Record<string, VehicleView>;
  queue: string[];
  available: number[];
  occupied: number[];
  reserved: Record<string, string>; // spot id -> holder namespace
  count: number;
  collisions: number;
}

export function emptySnapshot(): PanelSnapshot {
  return {
    vehicles: {},
    queue: [],
    available: [],
    occupied: [],
    reserved: {},
    count: 0,
    collisions: 0,
  };
}

const RESERVED_NS = new Set(["coord", "rsu", "sim", "probe", "_ready"]);

function vehicleStatusKey(key: string): string | null {
  const parts = key.split("/");
  if (parts.length === 3 && parts[0] === "avp" && parts[2] === "status" && !RESERVED_NS.has(parts[1])) {
    return parts[1];
  }
  return null;
}

export function reduce(snapshot: PanelSnapshot, env: Envelope): PanelSnapshot {
  const next: PanelSnapshot = {
    ...snapshot,
    vehicles: { ...snapshot.vehicles },
  };
  const ns = vehicleStatusKey(env.key);
  if (ns !== null) {
    const p = env.payload as StatusPayload;
    const prev = next.vehicles[ns];
    if (!prev || p.seq > prev.statusSeq) {
      next.vehicles[ns] = {
        ns,
        state: p.state,
        statusSeq: p.seq,
        failed: Boolean(p.failed),
        pose: prev?.pose,
      };
    }
    return next;
  }
  switch (env.key) {
    case "avp/coord/status": {
      // periodic full-table republication: how a late-joining panel converges
      const rows = (env.payload as { rows: Record<string, StatusPayload> }).rows ?? {};
      for (const [rowNs, row] of Object.entries(rows)) {
        const prev = next.vehicles[rowNs];
        if (!prev || row.seq > prev.statusSeq) {
          next.vehicles[rowNs] = {
            ns: rowNs,
            state: row.state,
            statusSeq: row.seq,
            failed: Boolean(row.failed),
            pose: prev?.pose,
          };
        }
      }
      break;
    }
    case "avp/sim/poses": {
      for (const entry of env.payload as PoseEntry[]) {
        const prev = next.vehicles[entry.ns];
        next.vehicles[entry.ns] = {
          ns: entry.ns,
          state: prev?.state ?? "?",
          statusSeq: prev?.statusSeq ?? 0,
          failed: prev?.failed ?? false,
          pose: { x: entry.x, y: entry.y, yaw: entry.yaw, len: entry.len, wid: entry.wid },
        };
      }
      break;
    }
    case "avp/rsu/occupancy": {
      const p = env.payload as OccupancyPayload;
      next.available = [...p.available].sort((a, b) => a - b);
      next.occupied = [...p.occupied].sort((a, b) => a - b);
      break;
    }
    case "avp/coord/queue":
      next.queue = [...((env.payload as { order: string[] }).order ?? [])];
      break;
    case "avp/coord/reserved":
      next.reserved = { ...((env.payload as { holders: Record<string, string> }).holders ?? {}) };
      break;
    case "avp/coord/vehicles":
      next.count = (env.payload as { count: number }).count ?? 0;
      break;
    case "avp/coord/evicted": {
      for (const gone of (env.payload as { evicted: string[] }).evicted ?? []) {
        delete next.vehicles[gone];
      }
      break;
    }
    case "avp/sim/collision":
      next.collisions = snapshot.collisions + 1;
      break;
  }
  return next;
}

export type SpotPaint = "available" | "reserved" | "occupied" | "unknown";

// reserved overlays available: a spot can be reserved while still physically
// empty, and the panel must show the reservation
export function spotPaint(snapshot: PanelSnapshot, spotId: number): SpotPaint {
  if (String(spotId) in snapshot.reserved) return "reserved";
  if (snapshot.occupied.includes(spotId)) return "occupied";
  if (snapshot.available.includes(spotId)) return "available";
  return "unknown";
}
