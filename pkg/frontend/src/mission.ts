import { RegionWire, Waypoint } from "./types.js";
import { ViewTransform } from "./transform.js";

/**
 * Mission editor state: waypoint clicks or a coverage-region drag, emitted
 * as canonical mission JSON that byte-matches the backend's serializer.
 *
 * Coordinates are rounded to 1 mm on entry — far below the half-pixel
 * fidelity budget, and it keeps the emitted JSON free of float dust.
 */

export function roundMm(v: number): number {
  return Math.round(v * 1000) / 1000;
}

/** Shortest round-trip decimal with a forced decimal point: the same text
 * Python's repr() produces for the values this editor can emit. */
export function fnum(n: number): string {
  if (!Number.isFinite(n)) throw new Error(`non-finite coordinate ${n}`);
  if (Number.isInteger(n)) return n.toFixed(1);
  return String(n);
}

export function serializeWaypointMission(waypoints: Waypoint[]): string {
  const wps = waypoints.map((w) => `{"x":${fnum(w.x)},"y":${fnum(w.y)}}`).join(",");
  return `{"version":1,"frame":"map","mode":"waypoints","waypoints":[${wps}]}`;
}

export function serializeCoverageMission(region: RegionWire | null): string {
  if (region === null) {
    return `{"version":1,"frame":"map","mode":"coverage"}`;
  }
  const r =
    `{"xmin":${fnum(region.xmin)},"ymin":${fnum(region.ymin)},` +
    `"xmax":${fnum(region.xmax)},"ymax":${fnum(region.ymax)}}`;
  return `{"version":1,"frame":"map","mode":"coverage","region":${r}}`;
}

export type Tool = "waypoints" | "coverage";

export class MissionEditor {
  tool: Tool = "waypoints";
  waypoints: Waypoint[] = [];
  region: RegionWire | null = null;
  private dragStart: Waypoint | null = null;

  constructor(private tf: ViewTransform) {}

  setTransform(tf: ViewTransform): void {
    this.tf = tf;
  }

  setTool(tool: Tool): void {
    this.tool = tool;
  }

  /** Handle a click at screen pixels; returns false when the click fell
   * outside the map extent and was ignored. */
  click(sx: number, sy: number): boolean {
    const { x, y } = this.tf.screenToWorld(sx, sy);
    if (!this.tf.insideMap(x, y)) return false;
    if (this.tool === "waypoints") {
      this.waypoints.push({ x: roundMm(x), y: roundMm(y) });
    } else if (this.dragStart === null) {
      this.dragStart = { x: roundMm(x), y: roundMm(y) };
    } else {
      const a = this.dragStart;
      const b = { x: roundMm(x), y: roundMm(y) };
      if (a.x !== b.x && a.y !== b.y) {
        this.region = {
          xmin: Math.min(a.x, b.x),
          ymin: Math.min(a.y, b.y),
          xmax: Math.max(a.x, b.x),
          ymax: Math.max(a.y, b.y),
        };
      }
      this.dragStart = null;
    }
    return true;
  }

  undo(): void {
    if (this.tool === "waypoints") {
      this.waypoints.pop();
    } else {
      this.region = null;
      this.dragStart = null;
    }
  }

  clear(): void {
    this.waypoints = [];
    this.region = null;
    this.dragStart = null;
  }

  canSubmit(): boolean {
    return this.tool === "waypoints" ? this.waypoints.length > 0 : true;
  }

  /** Canonical mission JSON for the current tool. */
  missionJson(): string {
    return this.tool === "waypoints"
      ? serializeWaypointMission(this.waypoints)
      : serializeCoverageMission(this.region);
  }
}
