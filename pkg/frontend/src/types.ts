/** Wire types of the mission-service HTTP/WS contract. */

export interface GridMetaWire {
  resolution: number;
  width: number;
  height: number;
  origin: { x: number; y: number; theta: number };
}

/** GET /api/map payload: run-length encoded trinary cells, row-major
 * starting at the bottom (world) row. 0 = free, 1 = occupied, 2 = unknown. */
export interface MapPayload {
  meta: GridMetaWire;
  cells_rle: [number, number][];
}

export const FREE = 0;
export const OCCUPIED = 1;
export const UNKNOWN = 2;

export interface PoseWire {
  x: number;
  y: number;
  theta: number;
}

export interface TelemetryFrame {
  stamp: number;
  pose: PoseWire;
  truth: PoseWire;
  mode: "IDLE" | "MAPPING" | "EXECUTING" | "PAUSED";
  progress: number;
  debris_remaining: number;
  cleaned_count: number;
  collision: boolean;
  /** present only when the active path changed since the last frame */
  path?: [number, number][];
}

export interface Waypoint {
  x: number;
  y: number;
}

export interface RegionWire {
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export function decodeCells(payload: MapPayload): Int8Array {
  const { width, height } = payload.meta;
  const cells = new Int8Array(width * height);
  let pos = 0;
  for (const [value, count] of payload.cells_rle) {
    cells.fill(value, pos, pos + count);
    pos += count;
  }
  if (pos !== cells.length) {
    throw new Error(`map RLE covers ${pos} cells, expected ${cells.length}`);
  }
  return cells;
}
