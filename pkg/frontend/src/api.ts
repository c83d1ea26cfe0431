import { MapPayload, TelemetryFrame } from "./types.js";
import { backoffMs } from "./telemetry.js";

/** Thin fetch/websocket glue over the documented endpoints; the UI never
 * mutates session state through anything else. */

export interface ApiError {
  status: number;
  code: string;
  message: string;
}

async function postJson(path: string, body: unknown): Promise<ApiError | null> {
  const res = await fetch(path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: typeof body === "string" ? body : JSON.stringify(body),
  });
  if (res.ok) return null;
  try {
    const doc = await res.json();
    return { status: res.status, code: doc.code ?? "error", message: doc.message ?? "" };
  } catch {
    return { status: res.status, code: "error", message: res.statusText };
  }
}

export const api = {
  state: async (): Promise<TelemetryFrame> => {
    const res = await fetch("/api/state");
    if (!res.ok) throw new Error(`state: HTTP ${res.status}`);
    return res.json();
  },
  map: async (): Promise<MapPayload | null> => {
    const res = await fetch("/api/map");
    if (res.status === 404) return null;
    if (!res.ok) throw new Error(`map: HTTP ${res.status}`);
    return res.json();
  },
  command: (type: string) => postJson("/api/command", { type }),
  teleop: (v: number, omega: number) => postJson("/api/teleop", { v, omega }),
  /** missionJson must already be the canonical serialized form. */
  mission: (missionJson: string) => postJson("/api/mission", missionJson),
};

export interface TelemetrySocket {
  close(): void;
}

/** Telemetry stream with backoff reconnect. Reconnects never re-send
 * commands; the caller's teleop state is reset through onReconnect. */
export function connectTelemetry(
  onFrame: (frame: TelemetryFrame) => void,
  onDown: () => void,
  onReconnect: () => void,
): TelemetrySocket {
  let ws: WebSocket | null = null;
  let closed = false;
  let attempt = 0;

  const open = () => {
    if (closed) return;
    const proto = location.protocol === "https:" ? "wss" : "ws";
    ws = new WebSocket(`${proto}://${location.host}/ws/telemetry`);
    ws.onopen = () => {
      if (attempt > 0) onReconnect();
      attempt = 0;
    };
    ws.onmessage = (ev) => onFrame(JSON.parse(ev.data));
    ws.onclose = () => {
      if (closed) return;
      onDown();
      attempt += 1;
      setTimeout(open, backoffMs(attempt));
    };
    ws.onerror = () => ws?.close();
  };
  open();
  return {
    close() {
      closed = true;
      ws?.close();
    },
  };
}
