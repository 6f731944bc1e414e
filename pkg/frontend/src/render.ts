// Top-down lot painting and the sidebar DOM. The canvas shows spots colored
// by availability, bays, and live vehicle footprints; the sidebar lists the
// queue, counts, and per-vehicle command buttons.

import { buttonRows } from "./legality.js";
import type { CommandKind, MapDoc, RectDoc } from "./protocol.js";
import { PanelSnapshot, spotPaint } from "./state.js";

const PAINT_COLORS: Record<string, string> = {
  available: "#2e7d32",
  reserved: "#f9a825",
  occupied: "#c62828",
  unknown: "#455a64",
};

interface ViewBox {
  scale: number;
  ox: number;
  oy: number;
}

export function fitView(map: MapDoc, width: number, height: number): ViewBox {
  const xs: number[] = [];
  const ys: number[] = [];
  const push = (r: RectDoc) => {
    const reach = Math.hypot(r.hx, r.hy);
    xs.push(r.cx - reach, r.cx + reach);
    ys.push(r.cy - reach, r.cy + reach);
  };
  map.spots.forEach(push);
  push(map.dropoff_bay);
  push(map.pickup_bay);
  for (const n of map.waypoints.nodes) {
    xs.push(n.x);
    ys.push(n.y);
  }
  const minX = Math.min(...xs) - 2;
  const maxX = Math.max(...xs) + 2;
  const minY = Math.min(...ys) - 2;
  const maxY = Math.max(...ys) + 2;
  const scale = Math.min(width / (maxX - minX), height / (maxY - minY));
  return { scale, ox: minX, oy: maxY };
}

function rectPath(ctx: CanvasRenderingContext2D, view: ViewBox, r: RectDoc): void {
  ctx.save();
  ctx.translate((r.cx - view.ox) * view.scale, (view.oy - r.cy) * view.scale);
  ctx.rotate(-r.yaw);
  ctx.beginPath();
  ctx.rect(-r.hx * view.scale, -r.hy * view.scale, 2 * r.hx * view.scale, 2 * r.hy * view.scale);
}

export function renderLot(
  canvas: HTMLCanvasElement,
  map: MapDoc,
  snapshot: PanelSnapshot,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const view = fitView(map, canvas.width, canvas.height);
  ctx.fillStyle = "#1b1f23";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  ctx.strokeStyle = "#37474f";
  for (const n of map.waypoints.nodes) {
    ctx.beginPath();
    ctx.arc((n.x - view.ox) * view.scale, (view.oy - n.y) * view.scale, 2, 0, Math.PI * 2);
    ctx.stroke();
  }

  for (const spot of map.spots) {
    const paint = spotPaint(snapshot, spot.id);
    rectPath(ctx, view, spot);
    ctx.fillStyle = PAINT_COLORS[paint] + "55";
    ctx.strokeStyle = PAINT_COLORS[paint];
    ctx.fill();
    ctx.stroke();
    ctx.restore();
    const holder = snapshot.reserved[String(spot.id)];
    ctx.fillStyle = "#eceff1";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(
      holder ? `${spot.id}:${holder}` : String(spot.id),
      (spot.cx - view.ox) * view.scale,
      (view.oy - spot.cy) * view.scale + 4,
    );
  }

  for (const [bay, label] of [
    [map.dropoff_bay, "drop-off"],
    [map.pickup_bay, "pickup"],
  ] as const) {
    rectPath(ctx, view, bay);
    ctx.strokeStyle = "#90a4ae";
    ctx.setLineDash([4, 3]);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.restore();
    ctx.fillStyle = "#90a4ae";
    ctx.fillText(label, (bay.cx - view.ox) * view.scale, (view.oy - bay.cy) * view.scale - 14);
  }

  for (const v of Object.values(snapshot.vehicles)) {
    if (!v.pose) continue;
    rectPath(ctx, view, {
      cx: v.pose.x,
      cy: v.pose.y,
      hx: v.pose.len / 2,
      hy: v.pose.wid / 2,
      yaw: v.pose.yaw,
    });
    ctx.fillStyle = "#4fc3f7cc";
    ctx.fill();
    ctx.restore();
    ctx.fillStyle = "#e1f5fe";
    ctx.fillText(v.ns, (v.pose.x - view.ox) * view.scale, (view.oy - v.pose.y) * view.scale - 10);
  }
}

export function renderSidebar(
  root: HTMLElement,
  snapshot: PanelSnapshot,
  stale: boolean,
  onCommand: (kind: CommandKind, ns: string) => void,
): void {
  root.textContent = "";
  const banner = document.createElement("div");
  banner.id = "staleness";
  banner.className = stale ? "banner stale" : "banner";
  banner.textContent = stale ? "STALE: no gateway traffic for 3s" : "live";
  root.appendChild(banner);

  const stats = document.createElement("div");
  stats.id = "stats";
  stats.textContent =
    `vehicles: ${snapshot.count}  collisions: ${snapshot.collisions}  ` +
    `available: [${snapshot.available.join(" ")}]`;
  root.appendChild(stats);

  const queue = document.createElement("div");
  queue.id = "queue";
  queue.textContent = snapshot.queue.length
    ? `drop-off queue: ${snapshot.queue.join(" -> ")}`
    : "drop-off queue: empty";
  root.appendChild(queue);

  const table = document.createElement("div");
  table.id = "vehicles";
  for (const row of buttonRows(snapshot.vehicles)) {
    const line = document.createElement("div");
    line.className = "vehicle-row";
    const label = document.createElement("span");
    label.textContent = `${row.ns}: ${row.state}`;
    line.appendChild(label);
    for (const [kind, enabled] of [
      ["DROPOFF", row.dropoff],
      ["PARK", row.park],
      ["RETRIEVE", row.retrieve],
    ] as [CommandKind, boolean][]) {
      const btn = document.createElement("button");
      btn.textContent = kind.toLowerCase();
      btn.disabled = !enabled;
      btn.dataset.ns = row.ns;
      btn.dataset.kind = kind;
      btn.onclick = () => onCommand(kind, row.ns);
      line.appendChild(btn);
    }
    table.appendChild(line);
  }
  root.appendChild(table);
}
