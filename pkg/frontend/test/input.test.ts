import { describe, expect, it } from "vitest";

import { DEFAULT_INPUT, InputMap, NO_KEYS, type KeyState } from "../src/input.js";

const DT = 0.05; // one server tick

const keys = (held: Partial<KeyState>): KeyState => ({ ...NO_KEYS, ...held });

describe("keyboard", () => {
  it("no keys -> zero throttle/brake and centered steering", () => {
    const a = new InputMap().update(DT, NO_KEYS);
    expect(a).toEqual({ steering: 0, throttle: 0, brake: 0 });
  });

  it("held arrows ramp their channel (bang-bang with smoothing)", () => {
    const im = new InputMap();
    const a1 = im.update(DT, keys({ left: true, up: true }));
    expect(a1.steering).toBeCloseTo(DEFAULT_INPUT.steerRiseRate * DT, 10);
    expect(a1.throttle).toBeCloseTo(DEFAULT_INPUT.pedalRiseRate * DT, 10);
    const a2 = im.update(DT, keys({ left: true, up: true }));
    expect(a2.steering).toBeGreaterThan(a1.steering);
    expect(a2.throttle).toBeGreaterThan(a1.throttle);
  });

  it("steering saturates at full deflection, ArrowLeft being positive", () => {
    const im = new InputMap();
    for (let i = 0; i < 60; i++) im.update(DT, keys({ left: true }));
    expect(im.update(DT, keys({ left: true })).steering).toBe(1);
    for (let i = 0; i < 120; i++) im.update(DT, keys({ right: true }));
    expect(im.update(DT, keys({ right: true })).steering).toBe(-1);
  });

  it("released steering decays to exactly zero", () => {
    const im = new InputMap();
    for (let i = 0; i < 20; i++) im.update(DT, keys({ left: true }));
    const first = im.update(DT, NO_KEYS);
    expect(first.steering).toBeLessThan(1);
    expect(first.steering).toBeGreaterThan(0);
    let last = first;
    for (let i = 0; i < 20; i++) last = im.update(DT, NO_KEYS);
    expect(last.steering).toBe(0);
  });

  it("released pedals drop to zero immediately", () => {
    const im = new InputMap();
    for (let i = 0; i < 10; i++) im.update(DT, keys({ up: true }));
    expect(im.update(DT, NO_KEYS).throttle).toBe(0);
    for (let i = 0; i < 10; i++) im.update(DT, keys({ down: true }));
    expect(im.update(DT, NO_KEYS).brake).toBe(0);
  });

  it("opposite steering keys cancel (decay toward center)", () => {
    const im = new InputMap();
    for (let i = 0; i < 10; i++) im.update(DT, keys({ left: true }));
    let a = im.update(DT, keys({ left: true, right: true }));
    for (let i = 0; i < 20; i++) a = im.update(DT, keys({ left: true, right: true }));
    expect(a.steering).toBe(0);
  });

  it("throttle and brake together -> brake wins", () => {
    const im = new InputMap();
    for (let i = 0; i < 10; i++) im.update(DT, keys({ up: true }));
    const a = im.update(DT, keys({ up: true, down: true }));
    expect(a.brake).toBeGreaterThan(0);
    expect(a.throttle).toBe(0);
  });
});

describe("gamepad", () => {
  it("trigger at 50% -> throttle exactly 0.5", () => {
    const a = new InputMap().update(DT, NO_KEYS,
      { steering: 0, throttle: 0.5, brake: 0 });
    expect(a.throttle).toBe(0.5);
  });

  it("stick is proportional and overrides the keyboard ramp", () => {
    const im = new InputMap();
    for (let i = 0; i < 60; i++) im.update(DT, keys({ left: true })); // ramp to 1
    const a = im.update(DT, keys({ left: true }),
      { steering: -0.3, throttle: 0, brake: 0 });
    expect(a.steering).toBe(-0.3);
  });

  it("channels inside the deadzone defer to the keyboard", () => {
    const im = new InputMap();
    const dz = DEFAULT_INPUT.padDeadzone;
    const a = im.update(DT, keys({ up: true }),
      { steering: dz / 2, throttle: dz / 2, brake: 0 });
    expect(a.steering).toBe(0); // keyboard not steering
    expect(a.throttle).toBeCloseTo(DEFAULT_INPUT.pedalRiseRate * DT, 10);
  });

  it("pad brake beats pad throttle", () => {
    const a = new InputMap().update(DT, NO_KEYS,
      { steering: 0, throttle: 0.8, brake: 0.4 });
    expect(a).toEqual({ steering: 0, throttle: 0, brake: 0.4 });
  });

  it("out-of-range pad values are clamped", () => {
    const a = new InputMap().update(DT, NO_KEYS,
      { steering: -1.6, throttle: 1.4, brake: 0 });
    expect(a.steering).toBe(-1);
    expect(a.throttle).toBe(1);
  });

  it("always emits a complete action", () => {
    const a = new InputMap().update(DT, NO_KEYS, null);
    expect(Object.keys(a).sort()).toEqual(["brake", "steering", "throttle"]);
  });
});
