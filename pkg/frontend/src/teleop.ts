/**
 * Keyboard teleoperation: held keys map to velocity presets, streamed to
 * the service at 10 Hz; releasing everything sends a single zero command
 * (the service additionally times stale commands out after 0.5 s).
 */

export interface TeleopCmd {
  v: number;
  omega: number;
}

export const FORWARD_V = 0.3;
export const REVERSE_V = -0.2;
export const TURN_OMEGA = 0.8;

const KEY_ALIASES: Record<string, string> = {
  w: "forward",
  arrowup: "forward",
  s: "reverse",
  arrowdown: "reverse",
  a: "left",
  arrowleft: "left",
  d: "right",
  arrowright: "right",
};

export class TeleopState {
  private held = new Set<string>();
  private lastSent: TeleopCmd | null = null;

  keyDown(key: string): void {
    const action = KEY_ALIASES[key.toLowerCase()];
    if (action) this.held.add(action);
  }

  keyUp(key: string): void {
    const action = KEY_ALIASES[key.toLowerCase()];
    if (action) this.held.delete(action);
  }

  releaseAll(): void {
    this.held.clear();
  }

  /** Preset for the currently held keys; combinations add up. */
  command(): TeleopCmd {
    let v = 0;
    let omega = 0;
    if (this.held.has("forward")) v += FORWARD_V;
    if (this.held.has("reverse")) v += REVERSE_V;
    if (this.held.has("left")) omega += TURN_OMEGA;
    if (this.held.has("right")) omega -= TURN_OMEGA;
    return { v, omega };
  }

  /** Command to transmit this 10 Hz tick, or null to stay silent.
   * Non-zero commands repeat every tick; zero is sent once on release. */
  tick(): TeleopCmd | null {
    const cmd = this.command();
    const isZero = cmd.v === 0 && cmd.omega === 0;
    const wasZero =
      this.lastSent !== null && this.lastSent.v === 0 && this.lastSent.omega === 0;
    if (isZero && (this.lastSent === null || wasZero)) return null;
    this.lastSent = cmd;
    return cmd;
  }
}
