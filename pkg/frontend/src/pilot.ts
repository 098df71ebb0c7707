/** Keyboard and gamepad mapping to normalized joystick axes.
 *
 * Axes follow the vehicle body convention [surge, sway, heave, roll, pitch,
 * yaw] with heave positive down. The keyboard baseline needs no hardware:
 * WASD drives surge/sway, arrow up/down drives heave (up = ascend), arrow
 * left/right yaws, and space is the emergency stop (handled by the caller
 * so it can outrun any staged stick sample). Roll/pitch stay unbound; the
 * vehicle is passively stable there.
 */
import { Vec6 } from "./protocol.js";

export const ESTOP_CODE = "Space";

/** KeyboardEvent.code values the pilot consumes (for preventDefault). */
export const PILOT_CODES = new Set([
  "KeyW",
  "KeyA",
  "KeyS",
  "KeyD",
  "ArrowUp",
  "ArrowDown",
  "ArrowLeft",
  "ArrowRight",
  ESTOP_CODE,
]);

export function axesFromKeys(pressed: ReadonlySet<string>): Vec6 {
  const axis = (plus: string, minus: string) =>
    (pressed.has(plus) ? 1 : 0) - (pressed.has(minus) ? 1 : 0);
  return [
    axis("KeyW", "KeyS"),
    axis("KeyD", "KeyA"),
    axis("ArrowDown", "ArrowUp"), // heave is positive down
    0,
    0,
    axis("ArrowRight", "ArrowLeft"),
  ];
}

/** Scale past the deadzone so output still spans the full [-1, 1]. */
export function applyDeadzone(value: number, deadzone = 0.15): number {
  const v = Math.max(-1, Math.min(1, value));
  if (Math.abs(v) < deadzone) return 0;
  return (v - Math.sign(v) * deadzone) / (1 - deadzone);
}

/**
 * Standard-mapping gamepad: left stick surge/sway, right stick yaw/heave.
 * Stick up reads -1 on the pad, so vertical axes are negated where the body
 * axis points the other way.
 */
export function axesFromGamepad(
  padAxes: readonly number[],
  deadzone = 0.15,
): Vec6 {
  const at = (i: number) => applyDeadzone(padAxes[i] ?? 0, deadzone);
  const neg = (v: number) => (v === 0 ? 0 : -v); // avoid -0 readouts
  return [neg(at(1)), at(0), at(3), 0, 0, at(2)];
}

/** Combine two sources (keyboard + pad) with per-axis clamping. */
export function mergeAxes(a: Vec6, b: Vec6): Vec6 {
  return a.map((v, i) => Math.max(-1, Math.min(1, v + (b[i] ?? 0)))) as Vec6;
}
