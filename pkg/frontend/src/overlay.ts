import { PoseWire, Waypoint, RegionWire } from "./types.js";
import { ViewTransform } from "./transform.js";

/** Vector overlays drawn above the map raster: rover glyph, pose trail,
 * active path, mission draft. Pure canvas-2d calls, no state. */

export function drawPath(ctx: CanvasRenderingContext2D, tf: ViewTransform,
                         points: [number, number][], color: string, width = 2): void {
  if (points.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  points.forEach(([x, y], i) => {
    const { sx, sy } = tf.worldToScreen(x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

export function drawRover(ctx: CanvasRenderingContext2D, tf: ViewTransform,
                          pose: PoseWire, radiusM: number, color: string): void {
  const { sx, sy } = tf.worldToScreen(pose.x, pose.y);
  const r = Math.max(radiusM * tf.scale, 4);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(sx, sy, r, 0, 2 * Math.PI);
  ctx.fill();
  // heading tick (screen y is flipped, hence -sin)
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(sx + 1.8 * r * Math.cos(pose.theta), sy - 1.8 * r * Math.sin(pose.theta));
  ctx.stroke();
}

export function drawWaypoints(ctx: CanvasRenderingContext2D, tf: ViewTransform,
                              waypoints: Waypoint[]): void {
  ctx.fillStyle = "#e67e22";
  ctx.strokeStyle = "#e67e22";
  ctx.lineWidth = 1.5;
  let prev: { sx: number; sy: number } | null = null;
  waypoints.forEach((w, i) => {
    const p = tf.worldToScreen(w.x, w.y);
    if (prev) {
      ctx.beginPath();
      ctx.moveTo(prev.sx, prev.sy);
      ctx.lineTo(p.sx, p.sy);
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(p.sx, p.sy, 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#ffffff";
    ctx.font = "9px sans-serif";
    ctx.fillText(String(i + 1), p.sx - 2.5, p.sy + 3);
    ctx.fillStyle = "#e67e22";
    prev = p;
  });
}

export function drawRegion(ctx: CanvasRenderingContext2D, tf: ViewTransform,
                           region: RegionWire): void {
  const a = tf.worldToScreen(region.xmin, region.ymax);
  const b = tf.worldToScreen(region.xmax, region.ymin);
  ctx.strokeStyle = "#27ae60";
  ctx.lineWidth = 2;
  ctx.setLineDash([6, 4]);
  ctx.strokeRect(a.sx, a.sy, b.sx - a.sx, b.sy - a.sy);
  ctx.setLineDash([]);
}
