/** Click-to-measure tool state machine.
 *
 * Two clicks stage a calibration segment, the operator types its real
 * length, and after the bridge confirms the scale two more clicks measure a
 * target. Every displayed number comes back from the bridge; the console
 * never converts pixels to meters itself. A failed request keeps the
 * operator's clicks and phase so they can retry.
 */
import { Calibration, Measurement, Point } from "./protocol.js";

export type MeasurePhase =
  | "need-calibration-points" // collecting the two reference clicks
  | "need-reference-length" // clicks staged, waiting for the known length
  | "calibrating" // calibrate request in flight
  | "ready" // scale confirmed, collecting target clicks
  | "measuring" // measure request in flight
  | "measured"; // result shown; next click starts a new target

export interface MeasureBackend {
  calibrate(p1: Point, p2: Point, lengthM: number): Promise<Calibration>;
  measure(p1: Point, p2: Point): Promise<Measurement>;
}

const PROMPTS: Record<MeasurePhase, string> = {
  "need-calibration-points": "click both ends of a known-length reference",
  "need-reference-length": "enter the reference length in meters",
  calibrating: "calibrating…",
  ready: "click both ends of the target",
  measuring: "measuring…",
  measured: "click to measure another target",
};

export class MeasureTool {
  phase: MeasurePhase = "need-calibration-points";
  calPoints: Point[] = [];
  targetPoints: Point[] = [];
  pixelsPerMeter: number | null = null;
  lengthM: number | null = null;
  lastError: string | null = null;

  constructor(private readonly backend: MeasureBackend) {}

  prompt(): string {
    return PROMPTS[this.phase];
  }

  /** Scale readout, e.g. "100.0 px/m"; empty until calibrated. */
  scaleText(): string {
    if (this.pixelsPerMeter === null) return "";
    return `${this.pixelsPerMeter.toFixed(1)} px/m`;
  }

  /** Length readout, e.g. "2.50 m"; empty until a measurement lands. */
  lengthText(): string {
    if (this.lengthM === null) return "";
    return `${this.lengthM.toFixed(2)} m`;
  }

  /** Throw away everything, including the confirmed scale. */
  reset(): void {
    this.phase = "need-calibration-points";
    this.calPoints = [];
    this.targetPoints = [];
    this.pixelsPerMeter = null;
    this.lengthM = null;
    this.lastError = null;
  }

  /** Feed one image click; returns a promise when it triggers a measure. */
  click(p: Point): Promise<void> | void {
    if (this.phase === "need-calibration-points") {
      this.calPoints.push(p);
      if (this.calPoints.length === 2) this.phase = "need-reference-length";
      return;
    }
    if (this.phase === "measured") {
      this.targetPoints = [];
      this.lengthM = null;
      this.phase = "ready";
    }
    if (this.phase === "ready") {
      if (this.targetPoints.length >= 2) this.targetPoints = [];
      this.targetPoints.push(p);
      if (this.targetPoints.length === 2) return this.runMeasure();
      return;
    }
    // a request is in flight or a length is pending; ignore clicks
  }

  /** Operator typed the reference length; fires the calibrate request. */
  async setReferenceLength(lengthM: number): Promise<void> {
    if (this.phase !== "need-reference-length") return;
    if (!Number.isFinite(lengthM) || lengthM <= 0) {
      this.lastError = "reference length must be a positive number of meters";
      return;
    }
    const [p1, p2] = this.calPoints;
    if (!p1 || !p2) return;
    this.phase = "calibrating";
    try {
      const cal = await this.backend.calibrate(p1, p2, lengthM);
      this.pixelsPerMeter = cal.pixels_per_meter;
      this.lastError = null;
      this.phase = "ready";
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      this.phase = "need-reference-length"; // clicks preserved for retry
    }
  }

  private async runMeasure(): Promise<void> {
    const [p1, p2] = this.targetPoints;
    if (!p1 || !p2) return;
    this.phase = "measuring";
    try {
      const m = await this.backend.measure(p1, p2);
      this.lengthM = m.length_m;
      this.lastError = null;
      this.phase = "measured";
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      this.phase = "ready"; // points preserved; next click starts a new pair
    }
  }
}
