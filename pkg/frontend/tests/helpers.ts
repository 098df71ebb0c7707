/** Shared test scaffolding: an in-memory transport and message factories. */
import { Telemetry } from "../src/protocol.js";
import { TransportLike } from "../src/session.js";

export class FakeTransport implements TransportLike {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  sent: string[] = [];
  closed = false;
  failSend = false;

  send(data: string): void {
    if (this.failSend) throw new Error("socket gone");
    this.sent.push(data);
  }

  close(): void {
    this.closed = true; // real sockets fire onclose later; tests call drop()
  }

  // test-side controls
  open(): void {
    this.onopen?.();
  }

  receive(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }

  drop(): void {
    this.onclose?.();
  }

  sentJson(): Array<Record<string, unknown>> {
    return this.sent.map((s) => JSON.parse(s));
  }

  sentOfType(type: string): Array<Record<string, unknown>> {
    return this.sentJson().filter((m) => m["type"] === type);
  }
}

/** Factory that records every transport it hands out. */
export function fakeFactory(): {
  factory: (url: string) => FakeTransport;
  made: FakeTransport[];
} {
  const made: FakeTransport[] = [];
  return {
    factory: () => {
      const t = new FakeTransport();
      made.push(t);
      return t;
    },
    made,
  };
}

export function makeHello(overrides: Record<string, unknown> = {}) {
  return {
    type: "hello",
    version: 1,
    tick_s: 0.02,
    mode_names: ["manual_constant", "manual_incremental", "station_keep"],
    thrust_limits: {
      min: Array(8).fill(-53.936575),
      max: Array(8).fill(69.627215),
    },
    ...overrides,
  };
}

export function makeTelemetry(overrides: Partial<Telemetry> = {}): Telemetry {
  return {
    type: "telemetry",
    timestamp_us: 1_000_000,
    pose: { x: 0.1, y: -0.2, z: 1.5, roll: 0, pitch: 0, yaw: 0.3 },
    rates: { u: 0, v: 0, w: 0, p: 0, q: 0, r: 0 },
    depth_m: 1.5,
    pressure_kpa: 116.3,
    water_temp_c: 12.5,
    battery_v: 47.8,
    mode: "manual_constant",
    thrust: [0, 0, 0, 0, 0, 0, 0, 0],
    faults: { bits: 0, allocation: false, leak: false, estop: false },
    manip: { yaw: 0, jaw: 0 },
    leak: false,
    ...overrides,
  };
}

export const ACK = (command: string) => ({ type: "ack", command });
