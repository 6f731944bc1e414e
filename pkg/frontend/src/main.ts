// Panel wire-up: fetch the lot map, open the gateway socket, fold envelopes
// into the snapshot, repaint on change, and send button commands back.

import type { MapDoc } from "./protocol.js";
import { renderLot, renderSidebar } from "./render.js";
import { emptySnapshot, reduce } from "./state.js";
import { PanelSocket } from "./ws.js";

function gatewayWsUrl(): string {
  const param = new URLSearchParams(window.location.search).get("ws");
  if (param) return param;
  const proto = window.location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${window.location.host}/`;
}

function mapUrl(): string {
  const ws = gatewayWsUrl();
  return ws.replace(/^ws/, "http").replace(/\/$/, "") + "/map.json";
}

async function start(): Promise<void> {
  const canvas = document.getElementById("lot") as HTMLCanvasElement;
  const sidebar = document.getElementById("sidebar") as HTMLElement;
  const map = (await (await fetch(mapUrl())).json()) as MapDoc;

  let snapshot = emptySnapshot();
  const socket = new PanelSocket();
  let dirty = true;

  socket.onEnvelope = (env) => {
    snapshot = reduce(snapshot, env);
    dirty = true;
  };
  socket.connect(gatewayWsUrl());

  const repaint = () => {
    renderLot(canvas, map, snapshot);
    renderSidebar(sidebar, snapshot, socket.isStale(), (kind, ns) => {
      socket.send({ kind, target_ns: ns });
    });
    dirty = false;
  };

  setInterval(() => {
    if (dirty) repaint();
  }, 100);
  setInterval(repaint, 1000); // staleness banner refresh even when idle
  repaint();
}

start().catch((err) => {
  const sidebar = document.getElementById("sidebar");
  if (sidebar) sidebar.textContent = `panel failed to start: ${err}`;
});
