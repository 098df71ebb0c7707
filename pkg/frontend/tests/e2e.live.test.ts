/** End-to-end against a real bridge: spawns `scorpion serve` and drives it
 * through the same ConsoleSession the browser uses (over the `ws` package).
 *
 * Skipped automatically when the scorpion CLI is not on PATH, so the rest
 * of the suite stays runnable from a plain checkout. Run these with the
 * simulator installed (`pip install -e ..`).
 */
import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ConsoleSession, TransportLike } from "../src/session.js";
import { Telemetry, Vec6 } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const crosscheck = JSON.parse(
  readFileSync(join(here, "fixtures/measure-crosscheck.json"), "utf8"),
) as {
  seed: number;
  calibrate: { p1: [number, number]; p2: [number, number]; length_m: number };
  pixels_per_meter: number;
  measure: { p1: [number, number]; p2: [number, number] };
  expected_length_m: number;
};

const hasScorpion = (() => {
  try {
    return spawnSync("scorpion", ["--help"], { timeout: 15_000 }).status === 0;
  } catch {
    return false;
  }
})();

const PORT = 18200 + Math.floor(Math.random() * 2000);
const URL = `ws://127.0.0.1:${PORT}`;

const wsFactory = (url: string): TransportLike =>
  new WebSocket(url) as unknown as TransportLike;

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

async function waitFor(
  pred: () => boolean,
  timeoutMs: number,
  what: string,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!pred()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(10);
  }
}

describe.skipIf(!hasScorpion)("live bridge", () => {
  let server: ChildProcess;
  let session: ConsoleSession;
  const frames: Telemetry[] = [];
  const arrivals: number[] = [];

  beforeAll(async () => {
    server = spawn(
      "scorpion",
      ["serve", "--port", String(PORT), "--seed", String(crosscheck.seed), "--speed", "1"],
      { stdio: "ignore" },
    );
    session = new ConsoleSession(URL, wsFactory, {
      telemetry: (t) => {
        frames.push(t);
        arrivals.push(Date.now());
      },
    });
    // the session's own reconnect ladder rides out server startup
    session.connect();
    await waitFor(
      () => session.state === "open" && session.hello !== null && frames.length > 0,
      30_000,
      "bridge to come up",
    );
  }, 40_000);

  afterAll(() => {
    session?.close();
    server?.kill();
  });

  it("announces the contract in its hello", () => {
    const hello = session.hello!;
    expect(hello.version).toBe(1);
    expect(hello.tick_s).toBeCloseTo(0.02, 9);
    expect(hello.mode_names).toEqual([
      "manual_constant",
      "manual_incremental",
      "station_keep",
    ]);
    expect(hello.thrust_limits?.min).toHaveLength(8);
    expect(hello.thrust_limits?.max).toHaveLength(8);
  });

  it("streams telemetry to the panel at 10 Hz or better", async () => {
    const start = arrivals.length;
    await sleep(2_000);
    const got = arrivals.length - start;
    expect(got).toBeGreaterThanOrEqual(20); // 10 Hz over a 2 s window
    expect(session.updateRateHz()).toBeGreaterThanOrEqual(10);
    expect(session.isStale()).toBe(false);
  }, 15_000);

  it("reflects a joystick command in reported thrust within 200 ms", async () => {
    await session.setMode("manual_constant");
    await waitFor(() => frames.length > 0, 5_000, "telemetry");

    const surge: Vec6 = [1, 0, 0, 0, 0, 0];
    const t0 = Date.now();
    const mark = frames.length;
    session.setJoystick(surge);
    const driver = setInterval(() => session.setJoystick(surge), 40);
    try {
      await waitFor(
        () => frames.slice(mark).some((f) => Math.max(...f.thrust.map(Math.abs)) > 0.5),
        5_000,
        "thrust to move",
      );
    } finally {
      clearInterval(driver);
    }
    const idx = frames.slice(mark).findIndex(
      (f) => Math.max(...f.thrust.map(Math.abs)) > 0.5,
    );
    const reflectedAt = arrivals[mark + idx]!;
    expect(reflectedAt - t0).toBeLessThan(200);
  }, 15_000);

  it("zeroes thrust in the next frame after an emergency stop", async () => {
    // make sure we are actually thrusting first
    await session.setMode("manual_constant");
    const yaw: Vec6 = [0, 0, 0, 0, 0, 1];
    const driver = setInterval(() => session.setJoystick(yaw), 40);
    try {
      await waitFor(
        () => {
          const f = frames[frames.length - 1];
          return !!f && Math.max(...f.thrust.map(Math.abs)) > 0.5;
        },
        5_000,
        "thrust before e-stop",
      );
    } finally {
      clearInterval(driver);
    }

    await session.emergencyStop();
    const atAck = frames.length;
    await waitFor(() => frames.length >= atAck + 3, 5_000, "frames after e-stop");
    const after = frames.slice(atAck, atAck + 3);
    for (const f of after) {
      expect(Math.max(...f.thrust.map(Math.abs))).toBe(0);
      expect(f.faults.estop).toBe(true);
    }
    expect(session.pilotingEnabled).toBe(false); // local gate until re-armed
  }, 15_000);

  it("measure tool matches the measurement engine on the committed fixture", async () => {
    const frame = await session.getFrame();
    expect(frame.width).toBe(640);
    expect(frame.height).toBe(480);
    expect(frame.png_base64.length).toBeGreaterThan(0);
    const labels = (frame.annotations ?? []).map((a) => a.label);
    expect(labels).toContain("reference");
    expect(labels).toContain("t-marker");

    const cal = await session.calibrate(
      crosscheck.calibrate.p1,
      crosscheck.calibrate.p2,
      crosscheck.calibrate.length_m,
    );
    const calErr =
      Math.abs(cal.pixels_per_meter - crosscheck.pixels_per_meter) /
      crosscheck.pixels_per_meter;
    expect(calErr).toBeLessThan(0.01);

    const m = await session.measure(crosscheck.measure.p1, crosscheck.measure.p2);
    const relErr =
      Math.abs(m.length_m - crosscheck.expected_length_m) /
      crosscheck.expected_length_m;
    expect(relErr).toBeLessThan(0.01); // same number the offline engine reports
  }, 15_000);

  it("serves a second console alongside the first", async () => {
    const got: Telemetry[] = [];
    const other = new ConsoleSession(URL, wsFactory, {
      telemetry: (t) => got.push(t),
    });
    other.connect();
    try {
      await waitFor(
        () => other.state === "open" && other.hello !== null && got.length >= 5,
        10_000,
        "second client",
      );
      await expect(other.setMode("manual_incremental")).resolves.toMatchObject({
        command: "set_mode",
      });
    } finally {
      other.close();
    }
  }, 15_000);
});
