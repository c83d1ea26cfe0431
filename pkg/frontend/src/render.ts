import { FREE, MapPayload, OCCUPIED, decodeCells } from "./types.js";
import { ViewTransform } from "./transform.js";

/**
 * Map raster tones (RGBA). Free water is a pale blue, occupied structure a
 * dark slate, unscanned space a mid grey — three clearly distinct tones.
 */
export const TONE_FREE: [number, number, number, number] = [226, 240, 248, 255];
export const TONE_OCCUPIED: [number, number, number, number] = [38, 50, 66, 255];
export const TONE_UNKNOWN: [number, number, number, number] = [156, 164, 172, 255];

/** Minimal RGBA buffer the renderer writes into; a browser adapter wraps
 * ImageData around the same layout, tests read it directly. */
export class Raster {
  data: Uint8ClampedArray;

  constructor(
    public width: number,
    public height: number,
  ) {
    this.data = new Uint8ClampedArray(width * height * 4);
  }

  pixel(x: number, y: number): [number, number, number, number] {
    const o = (y * this.width + x) * 4;
    return [this.data[o], this.data[o + 1], this.data[o + 2], this.data[o + 3]];
  }
}

/**
 * Rasterize the trinary map through the transform.
 *
 * Iterates screen pixels and samples the underlying cell, so arbitrary
 * scales stay hole-free; ~50 ms budget for a 200x120 grid is met with
 * room to spare.
 */
export function renderMap(payload: MapPayload, tf: ViewTransform, raster: Raster): void {
  const cells = decodeCells(payload);
  const { width: gw, height: gh, resolution } = payload.meta;
  const mapH = gh * resolution * tf.scale;
  const cellPx = resolution * tf.scale;
  const data = raster.data;
  for (let sy = 0; sy < raster.height; sy++) {
    const wyCell = Math.floor((mapH - (sy - tf.panY) - 0.5) / cellPx);
    const rowBase = sy * raster.width;
    const rowOk = wyCell >= 0 && wyCell < gh;
    for (let sx = 0; sx < raster.width; sx++) {
      let tone = TONE_UNKNOWN;
      if (rowOk) {
        const wxCell = Math.floor((sx - tf.panX + 0.5) / cellPx);
        if (wxCell >= 0 && wxCell < gw) {
          const v = cells[wyCell * gw + wxCell];
          tone = v === FREE ? TONE_FREE : v === OCCUPIED ? TONE_OCCUPIED : TONE_UNKNOWN;
        }
      }
      const o = (rowBase + sx) * 4;
      data[o] = tone[0];
      data[o + 1] = tone[1];
      data[o + 2] = tone[2];
      data[o + 3] = tone[3];
    }
  }
}
