/** Keyboard/gamepad mapping to body-frame joystick axes. */
import { describe, expect, it } from "vitest";
import {
  ESTOP_CODE,
  PILOT_CODES,
  applyDeadzone,
  axesFromGamepad,
  axesFromKeys,
  mergeAxes,
} from "../src/pilot.js";

const keys = (...codes: string[]) => new Set(codes);

describe("keyboard", () => {
  it("maps WASD to surge and sway", () => {
    expect(axesFromKeys(keys("KeyW"))).toEqual([1, 0, 0, 0, 0, 0]);
    expect(axesFromKeys(keys("KeyS"))).toEqual([-1, 0, 0, 0, 0, 0]);
    expect(axesFromKeys(keys("KeyD"))).toEqual([0, 1, 0, 0, 0, 0]);
    expect(axesFromKeys(keys("KeyA"))).toEqual([0, -1, 0, 0, 0, 0]);
  });

  it("maps arrows to heave and yaw with up meaning ascend", () => {
    // heave is body-down positive, so ArrowUp must command negative heave
    expect(axesFromKeys(keys("ArrowUp"))).toEqual([0, 0, -1, 0, 0, 0]);
    expect(axesFromKeys(keys("ArrowDown"))).toEqual([0, 0, 1, 0, 0, 0]);
    expect(axesFromKeys(keys("ArrowRight"))).toEqual([0, 0, 0, 0, 0, 1]);
    expect(axesFromKeys(keys("ArrowLeft"))).toEqual([0, 0, 0, 0, 0, -1]);
  });

  it("cancels opposing keys and combines independent ones", () => {
    expect(axesFromKeys(keys("KeyW", "KeyS"))).toEqual([0, 0, 0, 0, 0, 0]);
    expect(axesFromKeys(keys("KeyW", "KeyD", "ArrowLeft"))).toEqual([
      1, 1, 0, 0, 0, -1,
    ]);
    expect(axesFromKeys(keys())).toEqual([0, 0, 0, 0, 0, 0]);
  });

  it("reserves space for the emergency stop", () => {
    expect(ESTOP_CODE).toBe("Space");
    expect(PILOT_CODES.has("Space")).toBe(true);
    // pressing space must not drive any axis
    expect(axesFromKeys(keys("Space"))).toEqual([0, 0, 0, 0, 0, 0]);
  });
});

describe("gamepad", () => {
  it("zeroes inside the deadzone and rescales to full span outside it", () => {
    expect(applyDeadzone(0.1)).toBe(0);
    expect(applyDeadzone(-0.14)).toBe(0);
    expect(applyDeadzone(1)).toBe(1);
    expect(applyDeadzone(-1)).toBe(-1);
    expect(applyDeadzone(0.575)).toBeCloseTo(0.5, 12); // midpoint of live range
  });

  it("maps the standard layout with stick-up as positive surge", () => {
    // pad reports stick-up as -1 on axis 1
    expect(axesFromGamepad([0, -1, 0, 0])[0]).toBeCloseTo(1);
    expect(axesFromGamepad([1, 0, 0, 0])[1]).toBeCloseTo(1);
    expect(axesFromGamepad([0, 0, 1, 0])[5]).toBeCloseTo(1);
    expect(axesFromGamepad([0, 0, 0, 1])[2]).toBeCloseTo(1);
  });

  it("treats a centered pad as all zeros", () => {
    expect(axesFromGamepad([0.05, -0.08, 0.1, 0.02])).toEqual([
      0, 0, 0, 0, 0, 0,
    ]);
  });

  it("tolerates pads that report fewer axes", () => {
    expect(axesFromGamepad([0.5])).toEqual([0, applyDeadzone(0.5), 0, 0, 0, 0]);
  });
});

describe("merging sources", () => {
  it("adds keyboard and pad per axis with clamping", () => {
    expect(mergeAxes([1, 0, 0, 0, 0, 0], [1, 0.5, 0, 0, 0, -1])).toEqual([
      1, 0.5, 0, 0, 0, -1,
    ]);
    expect(mergeAxes([-1, 0, 0, 0, 0, 0], [-0.5, 0, 0, 0, 0, 0])[0]).toBe(-1);
  });
});
