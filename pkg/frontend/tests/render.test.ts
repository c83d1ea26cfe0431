import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";

import { Raster, renderMap, TONE_FREE, TONE_OCCUPIED, TONE_UNKNOWN } from "../src/render.js";
import { ViewTransform } from "../src/transform.js";
import { MapPayload, decodeCells } from "../src/types.js";

const realPayload: MapPayload = JSON.parse(
  readFileSync(new URL("./fixtures/map_payload.json", import.meta.url), "utf-8"),
);

// 2x2 grid, row 0 = bottom: [[OCCUPIED, FREE], [UNKNOWN, FREE]]
const tiny: MapPayload = {
  meta: { resolution: 1.0, width: 2, height: 2, origin: { x: 0, y: 0, theta: 0 } },
  cells_rle: [[1, 1], [0, 1], [2, 1], [0, 1]],
};

describe("renderMap", () => {
  it("renders the documented 2x2 golden blocks", () => {
    const tf = new ViewTransform(tiny.meta, 10); // 10 px per cell -> 20x20 canvas
    const raster = new Raster(20, 20);
    renderMap(tiny, tf, raster);
    // screen is flipped: top row of pixels shows grid row 1
    expect(raster.pixel(5, 5)).toEqual(TONE_UNKNOWN);    // row 1, col 0
    expect(raster.pixel(15, 5)).toEqual(TONE_FREE);      // row 1, col 1
    expect(raster.pixel(5, 15)).toEqual(TONE_OCCUPIED);  // row 0, col 0
    expect(raster.pixel(15, 15)).toEqual(TONE_FREE);     // row 0, col 1
    // block boundaries land on the cell edges
    expect(raster.pixel(9, 15)).toEqual(TONE_OCCUPIED);
    expect(raster.pixel(10, 15)).toEqual(TONE_FREE);
  });

  it("renders an all-unknown map as a uniform mid tone", () => {
    const payload: MapPayload = {
      meta: { resolution: 0.5, width: 4, height: 3, origin: { x: 0, y: 0, theta: 0 } },
      cells_rle: [[2, 12]],
    };
    const tf = new ViewTransform(payload.meta, 20);
    const raster = new Raster(40, 30);
    renderMap(payload, tf, raster);
    for (let y = 0; y < 30; y += 7) {
      for (let x = 0; x < 40; x += 7) {
        expect(raster.pixel(x, y)).toEqual(TONE_UNKNOWN);
      }
    }
  });

  it("rejects malformed payloads without producing a frame", () => {
    const broken: MapPayload = {
      meta: tiny.meta,
      cells_rle: [[1, 3]], // covers 3 of 4 cells
    };
    expect(() => decodeCells(broken)).toThrow(/RLE/);
  });

  it("renders the live-size map within the 50 ms budget", () => {
    const tf = new ViewTransform(realPayload.meta, 4);
    const size = tf.canvasSize();
    const raster = new Raster(size.width, size.height);
    const t0 = performance.now();
    renderMap(realPayload, tf, raster);
    const elapsed = performance.now() - t0;
    expect(elapsed).toBeLessThan(50);
    // sanity: the rendered frame contains at least two distinct tones
    const seen = new Set<string>();
    for (let y = 0; y < size.height; y += 5) {
      for (let x = 0; x < size.width; x += 5) {
        seen.add(raster.pixel(x, y).join(","));
      }
    }
    expect(seen.size).toBeGreaterThanOrEqual(2);
  });
});
