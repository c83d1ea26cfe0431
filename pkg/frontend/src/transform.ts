import { GridMetaWire } from "./types.js";

/**
 * World <-> screen mapping for the map canvas.
 *
 * World y points up, screen y points down; the flip happens exactly once,
 * here. scale is pixels per meter, pan a pixel offset applied on screen.
 */
export class ViewTransform {
  constructor(
    public meta: GridMetaWire,
    public scale: number,
    public panX = 0,
    public panY = 0,
  ) {}

  /** Canvas size that fits the whole map at the current scale. */
  canvasSize(): { width: number; height: number } {
    return {
      width: Math.ceil(this.meta.width * this.meta.resolution * this.scale),
      height: Math.ceil(this.meta.height * this.meta.resolution * this.scale),
    };
  }

  worldToScreen(x: number, y: number): { sx: number; sy: number } {
    const h = this.meta.height * this.meta.resolution * this.scale;
    return {
      sx: (x - this.meta.origin.x) * this.scale + this.panX,
      sy: h - (y - this.meta.origin.y) * this.scale + this.panY,
    };
  }

  screenToWorld(sx: number, sy: number): { x: number; y: number } {
    const h = this.meta.height * this.meta.resolution * this.scale;
    return {
      x: (sx - this.panX) / this.scale + this.meta.origin.x,
      y: (h - (sy - this.panY)) / this.scale + this.meta.origin.y,
    };
  }

  insideMap(x: number, y: number): boolean {
    const { origin, width, height, resolution } = this.meta;
    return (
      x >= origin.x &&
      x < origin.x + width * resolution &&
      y >= origin.y &&
      y < origin.y + height * resolution
    );
  }
}

/** Transform that fits the map into the given pixel box, centered. */
export function fitTransform(
  meta: GridMetaWire,
  boxWidth: number,
  boxHeight: number,
): ViewTransform {
  const mapW = meta.width * meta.resolution;
  const mapH = meta.height * meta.resolution;
  const scale = Math.min(boxWidth / mapW, boxHeight / mapH);
  return new ViewTransform(meta, scale);
}
