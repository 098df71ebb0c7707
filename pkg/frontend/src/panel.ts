/** Pure view-model for the telemetry dashboard.
 *
 * Turns the session snapshot into plain display values so the DOM layer
 * stays a dumb renderer and the logic stays testable. Thruster bars are
 * scaled against the per-thruster limits announced in the bridge hello;
 * without them the bars fall back to the largest magnitude in the frame so
 * the console never hardcodes vehicle physics.
 */
import { ConnectionState } from "./session.js";
import { Hello, Telemetry } from "./protocol.js";

export interface SessionView {
  state: ConnectionState;
  hello: Hello | null;
  latest: Telemetry | null;
  leakLatched: boolean;
  estopEngaged: boolean;
  isStale(now?: number): boolean;
  updateRateHz(now?: number): number;
  reconnectInMs(now?: number): number | null;
}

export interface ThrustBar {
  newtons: number;
  /** Signed fraction of the per-thruster limit, clamped to [-1, 1]. */
  fraction: number;
}

export interface PanelModel {
  connected: boolean;
  pilotingEnabled: boolean;
  stale: boolean;
  reconnectInMs: number | null;
  rateHz: number;
  mode: string | null;
  pose: Telemetry["pose"] | null;
  depthM: number | null;
  pressureKpa: number | null;
  waterTempC: number | null;
  batteryV: number | null;
  leakBanner: boolean;
  estop: boolean;
  allocationFault: boolean;
  bars: ThrustBar[];
  manipYaw: number | null;
  manipJaw: number | null;
}

export function thrustBars(
  thrust: readonly number[],
  hello: Hello | null,
): ThrustBar[] {
  const limits = hello?.thrust_limits ?? null;
  const fallback = Math.max(1e-9, ...thrust.map((f) => Math.abs(f)));
  return thrust.map((f, i) => {
    const span =
      f >= 0
        ? limits?.max[i] ?? fallback
        : Math.abs(limits?.min[i] ?? -fallback);
    const fraction = span > 0 ? f / span : 0;
    return { newtons: f, fraction: Math.max(-1, Math.min(1, fraction)) };
  });
}

export function panelModel(s: SessionView, now: number = Date.now()): PanelModel {
  const t = s.latest;
  return {
    connected: s.state === "open",
    pilotingEnabled: s.state === "open" && !s.estopEngaged,
    stale: s.isStale(now),
    reconnectInMs: s.reconnectInMs(now),
    rateHz: s.updateRateHz(now),
    mode: t?.mode ?? null,
    pose: t?.pose ?? null,
    depthM: t?.depth_m ?? null,
    pressureKpa: t?.pressure_kpa ?? null,
    waterTempC: t?.water_temp_c ?? null,
    batteryV: t?.battery_v ?? null,
    leakBanner: s.leakLatched,
    estop: (t?.faults.estop ?? false) || s.estopEngaged,
    allocationFault: t?.faults.allocation ?? false,
    bars: t ? thrustBars(t.thrust, s.hello) : [],
    manipYaw: t?.manip.yaw ?? null,
    manipJaw: t?.manip.jaw ?? null,
  };
}
