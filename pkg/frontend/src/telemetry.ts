import { PoseWire, TelemetryFrame } from "./types.js";

/**
 * Telemetry reducer: folds the websocket frame stream into the state the
 * dashboard renders. The path list only travels when it changes, so the
 * last seen path is sticky until a frame replaces it.
 */

export const STALE_AFTER_MS = 2000;
export const TRAIL_LIMIT = 3000;

export interface TelemetryView {
  connected: boolean;
  stale: boolean;
  lastFrameAt: number | null;
  stamp: number;
  mode: string;
  progress: number;
  cleaned: number;
  debrisRemaining: number;
  collision: boolean;
  pose: PoseWire | null;
  truth: PoseWire | null;
  path: [number, number][];
  trail: [number, number][];
}

export function initialView(): TelemetryView {
  return {
    connected: false,
    stale: false,
    lastFrameAt: null,
    stamp: 0,
    mode: "—",
    progress: 0,
    cleaned: 0,
    debrisRemaining: 0,
    collision: false,
    pose: null,
    truth: null,
    path: [],
    trail: [],
  };
}

export function applyFrame(view: TelemetryView, frame: TelemetryFrame,
                           nowMs: number): TelemetryView {
  const trail = view.trail.length >= TRAIL_LIMIT
    ? view.trail.slice(view.trail.length - TRAIL_LIMIT + 1)
    : view.trail.slice();
  trail.push([frame.pose.x, frame.pose.y]);
  return {
    connected: true,
    stale: false,
    lastFrameAt: nowMs,
    stamp: frame.stamp,
    mode: frame.mode,
    progress: frame.progress,
    cleaned: frame.cleaned_count,
    debrisRemaining: frame.debris_remaining,
    collision: frame.collision,
    pose: frame.pose,
    truth: frame.truth,
    path: frame.path !== undefined ? frame.path : view.path,
    trail,
  };
}

export function checkStale(view: TelemetryView, nowMs: number): TelemetryView {
  if (view.lastFrameAt === null) return view;
  const stale = nowMs - view.lastFrameAt > STALE_AFTER_MS;
  return stale === view.stale ? view : { ...view, stale };
}

export function markDisconnected(view: TelemetryView): TelemetryView {
  return { ...view, connected: false, stale: true };
}

/** Reconnect backoff: 0.5 s doubling to a 8 s ceiling. */
export function backoffMs(attempt: number): number {
  return Math.min(500 * 2 ** Math.max(0, attempt), 8000);
}
