import { describe, expect, it } from "vitest";

import { FORWARD_V, TURN_OMEGA, TeleopState } from "../src/teleop.js";

describe("teleop presets", () => {
  it("forward key held streams the forward preset", () => {
    const t = new TeleopState();
    t.keyDown("w");
    for (let i = 0; i < 5; i++) {
      expect(t.tick()).toEqual({ v: FORWARD_V, omega: 0 });
    }
  });

  it("release sends a single zero command then goes quiet", () => {
    const t = new TeleopState();
    t.keyDown("ArrowUp");
    expect(t.tick()).toEqual({ v: FORWARD_V, omega: 0 });
    t.keyUp("ArrowUp");
    expect(t.tick()).toEqual({ v: 0, omega: 0 });
    expect(t.tick()).toBeNull();
    expect(t.tick()).toBeNull();
  });

  it("combines forward and left", () => {
    const t = new TeleopState();
    t.keyDown("w");
    t.keyDown("a");
    expect(t.tick()).toEqual({ v: FORWARD_V, omega: TURN_OMEGA });
  });

  it("arrow keys alias wasd", () => {
    const t = new TeleopState();
    t.keyDown("ArrowLeft");
    expect(t.command()).toEqual({ v: 0, omega: TURN_OMEGA });
    t.keyDown("ArrowRight");
    expect(t.command()).toEqual({ v: 0, omega: 0 });
  });

  it("stays silent before any key", () => {
    const t = new TeleopState();
    expect(t.tick()).toBeNull();
  });

  it("releaseAll behaves like releasing every key", () => {
    const t = new TeleopState();
    t.keyDown("w");
    t.tick();
    t.releaseAll();
    expect(t.tick()).toEqual({ v: 0, omega: 0 });
    expect(t.tick()).toBeNull();
  });
});
