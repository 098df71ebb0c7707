/** Measure tool state machine against a scripted backend. */
import { describe, expect, it } from "vitest";
import { MeasureBackend, MeasureTool } from "../src/measure.js";
import { Calibration, Measurement, Point } from "../src/protocol.js";

type Deferred<T> = { promise: Promise<T>; resolve: (v: T) => void; reject: (e: Error) => void };
function deferred<T>(): Deferred<T> {
  let resolve!: (v: T) => void;
  let reject!: (e: Error) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

class ScriptedBackend implements MeasureBackend {
  calibrateCalls: Array<[Point, Point, number]> = [];
  measureCalls: Array<[Point, Point]> = [];
  nextCalibration: Deferred<Calibration> | null = null;
  nextMeasurement: Deferred<Measurement> | null = null;

  calibrate(p1: Point, p2: Point, lengthM: number): Promise<Calibration> {
    this.calibrateCalls.push([p1, p2, lengthM]);
    this.nextCalibration = deferred<Calibration>();
    return this.nextCalibration.promise;
  }

  measure(p1: Point, p2: Point): Promise<Measurement> {
    this.measureCalls.push([p1, p2]);
    this.nextMeasurement = deferred<Measurement>();
    return this.nextMeasurement.promise;
  }
}

function calibrated(): { tool: MeasureTool; backend: ScriptedBackend; done: Promise<void> } {
  const backend = new ScriptedBackend();
  const tool = new MeasureTool(backend);
  tool.click([0, 0]);
  tool.click([100, 0]);
  const done = tool.setReferenceLength(1.0);
  backend.nextCalibration!.resolve({ type: "calibration", pixels_per_meter: 100.0 });
  return { tool, backend, done };
}

describe("calibration flow", () => {
  it("collects two reference clicks, then a length, then confirms the scale", async () => {
    const backend = new ScriptedBackend();
    const tool = new MeasureTool(backend);
    expect(tool.phase).toBe("need-calibration-points");
    expect(tool.scaleText()).toBe("");

    tool.click([0, 0]);
    expect(tool.phase).toBe("need-calibration-points");
    tool.click([100, 0]);
    expect(tool.phase).toBe("need-reference-length");
    expect(backend.calibrateCalls).toHaveLength(0); // nothing sent yet

    const p = tool.setReferenceLength(1.0);
    expect(tool.phase).toBe("calibrating");
    expect(backend.calibrateCalls).toEqual([[[0, 0], [100, 0], 1.0]]);
    backend.nextCalibration!.resolve({ type: "calibration", pixels_per_meter: 100.0 });
    await p;

    expect(tool.phase).toBe("ready");
    expect(tool.scaleText()).toBe("100.0 px/m"); // bridge's number verbatim
  });

  it("rejects a non-positive reference length without calling the bridge", async () => {
    const backend = new ScriptedBackend();
    const tool = new MeasureTool(backend);
    tool.click([0, 0]);
    tool.click([100, 0]);
    await tool.setReferenceLength(0);
    expect(tool.lastError).toMatch(/positive/);
    expect(tool.phase).toBe("need-reference-length");
    expect(backend.calibrateCalls).toHaveLength(0);
    await tool.setReferenceLength(Number.NaN);
    expect(backend.calibrateCalls).toHaveLength(0);
  });

  it("keeps the clicks and phase when the bridge rejects the calibration", async () => {
    const backend = new ScriptedBackend();
    const tool = new MeasureTool(backend);
    tool.click([5, 5]);
    tool.click([5.1, 5]);
    const p = tool.setReferenceLength(1.0);
    backend.nextCalibration!.reject(new Error("bad-request: degenerate segment"));
    await p;
    expect(tool.phase).toBe("need-reference-length");
    expect(tool.lastError).toMatch(/degenerate/);
    expect(tool.calPoints).toEqual([[5, 5], [5.1, 5]]); // retry allowed

    const retry = tool.setReferenceLength(1.0);
    backend.nextCalibration!.resolve({ type: "calibration", pixels_per_meter: 42.0 });
    await retry;
    expect(tool.phase).toBe("ready");
  });

  it("ignores clicks while waiting for the length or the bridge", async () => {
    const backend = new ScriptedBackend();
    const tool = new MeasureTool(backend);
    tool.click([0, 0]);
    tool.click([100, 0]);
    tool.click([7, 7]); // length pending: ignored
    expect(tool.calPoints).toHaveLength(2);
    expect(tool.targetPoints).toHaveLength(0);

    const p = tool.setReferenceLength(1.0);
    tool.click([8, 8]); // calibrating: ignored
    expect(tool.targetPoints).toHaveLength(0);
    backend.nextCalibration!.resolve({ type: "calibration", pixels_per_meter: 10 });
    await p;
  });
});

describe("measurement flow", () => {
  it("measures after two target clicks and shows the bridge's length", async () => {
    const { tool, backend, done } = calibrated();
    await done;
    tool.click([0, 0]);
    expect(tool.phase).toBe("ready");
    const p = tool.click([250, 0]) as Promise<void>;
    expect(tool.phase).toBe("measuring");
    expect(backend.measureCalls).toEqual([[[0, 0], [250, 0]]]);
    backend.nextMeasurement!.resolve({ type: "measurement", length_m: 2.5 });
    await p;
    expect(tool.phase).toBe("measured");
    expect(tool.lengthText()).toBe("2.50 m"); // bridge's number verbatim
  });

  it("starts a fresh target on the next click while keeping the scale", async () => {
    const { tool, backend, done } = calibrated();
    await done;
    tool.click([0, 0]);
    const p1 = tool.click([100, 0]) as Promise<void>;
    backend.nextMeasurement!.resolve({ type: "measurement", length_m: 1.0 });
    await p1;
    expect(tool.phase).toBe("measured");

    tool.click([10, 10]);
    expect(tool.phase).toBe("ready");
    expect(tool.lengthM).toBeNull(); // stale readout cleared
    expect(tool.targetPoints).toEqual([[10, 10]]);
    expect(tool.pixelsPerMeter).toBe(100.0); // calibration survives

    const p2 = tool.click([10, 60]) as Promise<void>;
    backend.nextMeasurement!.resolve({ type: "measurement", length_m: 0.5 });
    await p2;
    expect(tool.lengthText()).toBe("0.50 m");
  });

  it("keeps state and reports the error when a measurement fails", async () => {
    const { tool, backend, done } = calibrated();
    await done;
    tool.click([0, 0]);
    const p = tool.click([9999, 0]) as Promise<void>;
    backend.nextMeasurement!.reject(new Error("bad-request: outside frame"));
    await p;
    expect(tool.phase).toBe("ready");
    expect(tool.lastError).toMatch(/outside frame/);
    expect(tool.pixelsPerMeter).toBe(100.0); // calibration untouched

    tool.click([0, 0]);
    const retry = tool.click([50, 0]) as Promise<void>;
    backend.nextMeasurement!.resolve({ type: "measurement", length_m: 0.5 });
    await retry;
    expect(tool.phase).toBe("measured");
    expect(tool.lastError).toBeNull();
  });

  it("reset discards the calibration and readouts entirely", async () => {
    const { tool, done } = calibrated();
    await done;
    tool.reset();
    expect(tool.phase).toBe("need-calibration-points");
    expect(tool.pixelsPerMeter).toBeNull();
    expect(tool.scaleText()).toBe("");
    expect(tool.lengthText()).toBe("");
  });

  it("prompts the operator through every phase", async () => {
    const backend = new ScriptedBackend();
    const tool = new MeasureTool(backend);
    expect(tool.prompt()).toMatch(/known-length reference/);
    tool.click([0, 0]);
    tool.click([1, 0]);
    expect(tool.prompt()).toMatch(/reference length/);
    const p = tool.setReferenceLength(2);
    expect(tool.prompt()).toMatch(/calibrating/);
    backend.nextCalibration!.resolve({ type: "calibration", pixels_per_meter: 5 });
    await p;
    expect(tool.prompt()).toMatch(/target/);
  });
});
