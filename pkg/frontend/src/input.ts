/** Device input -> complete action, once per server tick.
 *
 * Keyboard is bang-bang with smoothing: a held arrow ramps its channel
 * toward full deflection; releasing the steering keys lets steering decay
 * back to center, while releasing a pedal key zeroes that pedal instantly.
 * A gamepad, when one is active, drives each channel proportionally.
 * Whatever the devices say, the brake channel wins over throttle.
 */

import type { Action } from "./protocol.js";
import { clampAction } from "./protocol.js";

export interface KeyState {
  left: boolean;
  right: boolean;
  up: boolean;
  down: boolean;
}

export const NO_KEYS: KeyState = { left: false, right: false, up: false, down: false };

/** Normalized gamepad sample: steering in [-1, 1] (positive = left, matching
 * the wire convention), pedals in [0, 1].  Extraction from the Gamepad API
 * (stick sign flip, trigger values, deadzone) happens in the page shell. */
export interface PadState {
  steering: number;
  throttle: number;
  brake: number;
}

export interface InputConfig {
  steerRiseRate: number;  // full deflections per second while a key is held
  steerDecayRate: number; // decay toward center per second when released
  pedalRiseRate: number;  // pedal travel per second while a key is held
  padDeadzone: number;    // below this magnitude a pad channel defers to keys
}

export const DEFAULT_INPUT: InputConfig = {
  steerRiseRate: 2.5,
  steerDecayRate: 3.0,
  pedalRiseRate: 3.0,
  padDeadzone: 0.08,
};

function towards(value: number, target: number, maxStep: number): number {
  const d = target - value;
  if (Math.abs(d) <= maxStep) return target;
  return value + Math.sign(d) * maxStep;
}

export class InputMap {
  private steer = 0;
  private throttle = 0;
  private brake = 0;

  constructor(private readonly cfg: InputConfig = DEFAULT_INPUT) {}

  /** Advance the smoothing state by dt seconds and return the action to send.
   * `pad` is null when no gamepad is connected. */
  update(dt: number, keys: KeyState, pad: PadState | null = null): Action {
    // keyboard steering: ramp toward the held direction, decay when released
    // (ArrowLeft steers left, which is positive steering on the wire)
    const steerTarget = (keys.left ? 1 : 0) + (keys.right ? -1 : 0);
    if (steerTarget !== 0) {
      this.steer = towards(this.steer, steerTarget, this.cfg.steerRiseRate * dt);
    } else {
      this.steer = towards(this.steer, 0, this.cfg.steerDecayRate * dt);
    }

    // pedals: smooth rise while held, instant zero on release
    this.throttle = keys.up
      ? towards(this.throttle, 1, this.cfg.pedalRiseRate * dt)
      : 0;
    this.brake = keys.down
      ? towards(this.brake, 1, this.cfg.pedalRiseRate * dt)
      : 0;

    let steering = this.steer;
    let throttle = this.throttle;
    let brake = this.brake;

    // an active gamepad channel overrides the keyboard's
    if (pad) {
      if (Math.abs(pad.steering) > this.cfg.padDeadzone) {
        steering = pad.steering;
        this.steer = pad.steering; // keep the ramp continuous on hand-off
      }
      if (pad.throttle > this.cfg.padDeadzone) throttle = pad.throttle;
      if (pad.brake > this.cfg.padDeadzone) brake = pad.brake;
    }

    // brake wins: never command both pedals
    if (brake > 0) throttle = 0;

    return clampAction({ steering, throttle, brake });
  }

  reset(): void {
    this.steer = 0;
    this.throttle = 0;
    this.brake = 0;
  }
}
