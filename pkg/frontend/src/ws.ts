// Gateway socket wrapper: one websocket, sequential message handling,
// staleness tracking for the banner.

import { Envelope, OutboundCommand, parseEnvelope } from "./protocol.js";

export const STALE_AFTER_MS = 3000;

export class PanelSocket {
  private ws: WebSocket | null = null;
  private lastMessageAt = 0;
  onEnvelope: (env: Envelope) => void = () => {};
  onAck: (msg: Record<string, unknown>) => void = () => {};

  connect(url: string): void {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (event) => {
      this.lastMessageAt = Date.now();
      const env = parseEnvelope(String(event.data));
      if (env !== null) {
        this.onEnvelope(env);
      } else {
        try {
          this.onAck(JSON.parse(String(event.data)));
        } catch {
          // ignore unparseable frames
        }
      }
    };
  }

  send(command: OutboundCommand): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(command));
      return true;
    }
    return false;
  }

  isStale(now: number = Date.now()): boolean {
    return this.lastMessageAt === 0 || now - this.lastMessageAt > STALE_AFTER_MS;
  }
}
