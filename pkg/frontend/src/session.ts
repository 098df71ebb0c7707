/** Connection and command plumbing for the operator console.
 *
 * Owns the websocket lifecycle (reconnect with capped exponential backoff),
 * keeps the newest telemetry plus staleness/rate bookkeeping, latches leak
 * alerts until the operator resets them, coalesces joystick output to 20 Hz
 * latest-wins with strictly increasing sequence numbers, and lets the
 * emergency stop jump ahead of any queued stick sample.
 *
 * The bridge answers every client message in order with exactly one reply
 * (ack, error, frame, calibration or measurement) while telemetry broadcasts
 * interleave freely, so replies are matched to requests with a FIFO queue.
 */
import {
  Ack,
  BridgeError,
  Calibration,
  ClientMessage,
  FrameMsg,
  Hello,
  Measurement,
  ModeName,
  Point,
  ServerMessage,
  Telemetry,
  Vec6,
  calibrateMsg,
  emergencyStopMsg,
  getFrameMsg,
  joystickMsg,
  manipMsg,
  measureMsg,
  parseServerMessage,
  setHoldSetpointMsg,
  setModeMsg,
  trimFfMsg,
} from "./protocol.js";

/** Minimum spacing between joystick sends (20 Hz). */
export const JOYSTICK_PERIOD_MS = 50;
/** Telemetry older than this marks the feed stale. */
export const STALE_AFTER_MS = 1000;
/** Reconnect delays; the last entry repeats. */
export const BACKOFF_MS = [1000, 2000, 4000, 8000, 10000] as const;

export type ConnectionState = "connecting" | "open" | "closed";
export type Tool = "pilot" | "measure" | "photosphere";

/** Narrow view of a websocket; satisfied by the browser API and `ws`. */
export interface TransportLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}
export type TransportFactory = (url: string) => TransportLike;

export interface SessionEvents {
  state?: (state: ConnectionState) => void;
  hello?: (hello: Hello) => void;
  telemetry?: (frame: Telemetry) => void;
  bridgeError?: (err: BridgeError) => void;
}

type Expect = "ack" | "frame" | "calibration" | "measurement";

interface PendingReply {
  expect: Expect;
  resolve: (msg: ServerMessage) => void;
  reject: (err: Error) => void;
}

const noop = () => {};

export class ConsoleSession {
  state: ConnectionState = "closed";
  hello: Hello | null = null;
  latest: Telemetry | null = null;
  tool: Tool = "pilot";
  /** Sticks on the first leaky frame; cleared only by resetAlerts(). */
  leakLatched = false;
  /** Set by emergencyStop(); blocks stick input until a mode change. */
  estopEngaged = false;
  lastBridgeError: BridgeError | null = null;
  /** Messages that failed schema validation (dropped, never rendered). */
  schemaErrors = 0;

  private ws: TransportLike | null = null;
  private closedByUser = false;
  private openedAt: number | null = null;
  private lastFrameAt: number | null = null;
  private frameTimes: number[] = [];
  private pending: PendingReply[] = [];

  private seqCounter = 0;
  private pendingAxes: Vec6 | null = null;
  private joyTimer: ReturnType<typeof setTimeout> | null = null;
  private lastJoySentAt = Number.NEGATIVE_INFINITY;

  private reconnectAttempt = 0;
  private reconnectAtMs: number | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly url: string,
    private readonly factory: TransportFactory,
    private readonly events: SessionEvents = {},
  ) {}

  // -- lifecycle --------------------------------------------------------------

  connect(): void {
    if (this.ws) return;
    this.closedByUser = false;
    this.clearReconnectTimer();
    this.setState("connecting");
    const ws = this.factory(this.url);
    this.ws = ws;
    ws.onopen = () => this.handleOpen();
    ws.onmessage = (ev) => this.handleMessage(ev.data);
    ws.onclose = () => this.handleClose();
    ws.onerror = noop; // onclose always follows; reconnect handles it
  }

  close(): void {
    this.closedByUser = true;
    this.clearReconnectTimer();
    const ws = this.ws;
    this.ws = null;
    if (ws) {
      ws.onopen = ws.onmessage = ws.onclose = ws.onerror = null;
      ws.close();
    }
    this.dropConnectionState("session closed");
    this.setState("closed");
  }

  /** Operator acknowledged the alarm panel (new session context). */
  resetAlerts(): void {
    this.leakLatched = false;
    this.lastBridgeError = null;
  }

  get pilotingEnabled(): boolean {
    return this.state === "open" && !this.estopEngaged;
  }

  isStale(now: number = Date.now()): boolean {
    if (this.state !== "open") return false;
    const ref = this.lastFrameAt ?? this.openedAt;
    return ref !== null && now - ref > STALE_AFTER_MS;
  }

  /** Telemetry messages received over the trailing second. */
  updateRateHz(now: number = Date.now()): number {
    let n = 0;
    for (const t of this.frameTimes) if (now - t <= 1000 && now - t >= 0) n++;
    return n;
  }

  /** Milliseconds until the next reconnect attempt, or null if none is due. */
  reconnectInMs(now: number = Date.now()): number | null {
    if (this.reconnectAtMs === null) return null;
    return Math.max(0, this.reconnectAtMs - now);
  }

  // -- piloting ---------------------------------------------------------------

  /**
   * Feed the newest stick sample. Sends immediately when the 50 ms budget
   * allows, otherwise stages it (latest wins) for one deferred flush.
   * Silently dropped while disconnected or e-stopped.
   */
  setJoystick(axes: Vec6): void {
    if (!this.pilotingEnabled) return;
    const clamped = axes.map((v) =>
      Math.max(-1, Math.min(1, Number.isFinite(v) ? v : 0)),
    ) as Vec6;
    const now = Date.now();
    if (this.joyTimer === null && now - this.lastJoySentAt >= JOYSTICK_PERIOD_MS) {
      this.sendJoystick(clamped, now);
      return;
    }
    this.pendingAxes = clamped;
    if (this.joyTimer === null) {
      const delay = Math.max(0, this.lastJoySentAt + JOYSTICK_PERIOD_MS - now);
      this.joyTimer = setTimeout(() => this.flushJoystick(), delay);
    }
  }

  /**
   * Emergency stop: discards any staged stick sample, goes out ahead of it,
   * and gates stick input until the operator re-arms via setMode().
   */
  emergencyStop(): Promise<Ack> {
    this.cancelJoystick();
    this.estopEngaged = true;
    return this.request<Ack>(emergencyStopMsg(), "ack");
  }

  setMode(mode: ModeName): Promise<Ack> {
    const p = this.request<Ack>(setModeMsg(mode), "ack");
    this.estopEngaged = false; // re-armed; bridge clears the latch on mode set
    return p;
  }

  /** Flip to station-keep and pin the hold pose (defaults to where we are). */
  engageStationKeep(pose?: Vec6): Promise<Ack> {
    let target = pose;
    if (!target) {
      const t = this.latest;
      if (!t) {
        return Promise.reject(
          new Error("no telemetry yet; cannot hold current pose"),
        );
      }
      target = [t.pose.x, t.pose.y, t.pose.z, 0, 0, t.pose.yaw];
    }
    // back to back; the bridge applies them in order
    const modeAck = this.setMode("station_keep");
    const holdAck = this.request<Ack>(setHoldSetpointMsg(target), "ack");
    return Promise.all([modeAck, holdAck]).then(([, hold]) => hold);
  }

  setManip(yawRate: number, jawRate: number): Promise<Ack> {
    return this.request<Ack>(manipMsg(yawRate, jawRate), "ack");
  }

  setTrim(wrench: Vec6): Promise<Ack> {
    return this.request<Ack>(trimFfMsg(wrench), "ack");
  }

  // -- camera tools -------------------------------------------------------------

  getFrame(): Promise<FrameMsg> {
    return this.request<FrameMsg>(getFrameMsg(), "frame");
  }

  calibrate(p1: Point, p2: Point, lengthM: number): Promise<Calibration> {
    return this.request<Calibration>(calibrateMsg(p1, p2, lengthM), "calibration");
  }

  measure(p1: Point, p2: Point, subpixel = true): Promise<Measurement> {
    return this.request<Measurement>(measureMsg(p1, p2, subpixel), "measurement");
  }

  // -- internals ----------------------------------------------------------------

  private setState(state: ConnectionState): void {
    if (this.state === state) return;
    this.state = state;
    this.events.state?.(state);
  }

  private handleOpen(): void {
    this.openedAt = Date.now();
    this.reconnectAttempt = 0;
    this.reconnectAtMs = null;
    this.setState("open");
  }

  private handleClose(): void {
    if (this.ws) {
      this.ws.onopen = this.ws.onmessage = this.ws.onclose = this.ws.onerror = null;
      this.ws = null;
    }
    this.dropConnectionState("connection lost");
    this.setState("closed");
    if (!this.closedByUser) this.scheduleReconnect();
  }

  /** Reject in-flight requests and stop the stick pipeline. */
  private dropConnectionState(reason: string): void {
    this.cancelJoystick();
    const pending = this.pending;
    this.pending = [];
    for (const p of pending) p.reject(new Error(reason));
    this.openedAt = null;
  }

  private scheduleReconnect(): void {
    const idx = Math.min(this.reconnectAttempt, BACKOFF_MS.length - 1);
    const delay = BACKOFF_MS[idx] ?? 10000;
    this.reconnectAttempt++;
    this.reconnectAtMs = Date.now() + delay;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.reconnectAtMs = null;
      this.connect();
    }, delay);
  }

  private clearReconnectTimer(): void {
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.reconnectAtMs = null;
  }

  private handleMessage(data: unknown): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(
        typeof data === "string" ? data : String(data),
      );
    } catch {
      this.schemaErrors++;
      return;
    }
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        this.events.hello?.(msg);
        return;
      case "telemetry": {
        const now = Date.now();
        this.latest = msg;
        this.lastFrameAt = now;
        this.frameTimes.push(now);
        if (this.frameTimes.length > 256) this.frameTimes.shift();
        if (msg.leak || msg.faults.leak) this.leakLatched = true;
        this.events.telemetry?.(msg);
        return;
      }
      case "error":
        this.lastBridgeError = msg;
        this.events.bridgeError?.(msg);
        this.settle(msg);
        return;
      case "ack":
      case "frame":
      case "calibration":
      case "measurement":
        this.settle(msg);
        return;
    }
  }

  /** Match one reply to the oldest outstanding request. */
  private settle(msg: ServerMessage): void {
    const head = this.pending.shift();
    if (!head) return; // unsolicited (e.g. reply to a previous connection)
    if (msg.type === "error") {
      head.reject(new Error(`${msg.error}: ${msg.detail ?? ""}`.trim()));
    } else if (msg.type === head.expect) {
      head.resolve(msg);
    } else {
      head.reject(new Error(`expected ${head.expect}, bridge sent ${msg.type}`));
    }
  }

  private sendRaw(msg: ClientMessage, expect: Expect, entry?: Partial<PendingReply>): boolean {
    if (!this.ws || this.state !== "open") return false;
    const text = JSON.stringify(msg);
    try {
      this.ws.send(text);
    } catch {
      this.ws.close();
      return false;
    }
    this.pending.push({
      expect,
      resolve: entry?.resolve ?? noop,
      reject: entry?.reject ?? noop,
    });
    return true;
  }

  private request<T extends ServerMessage>(msg: ClientMessage, expect: Expect): Promise<T> {
    return new Promise<T>((resolve, reject) => {
      const ok = this.sendRaw(msg, expect, {
        resolve: (m) => resolve(m as T),
        reject,
      });
      if (!ok) reject(new Error("not connected"));
    });
  }

  private sendJoystick(axes: Vec6, now: number): void {
    this.lastJoySentAt = now;
    this.sendRaw(joystickMsg(axes, ++this.seqCounter), "ack");
  }

  private flushJoystick(): void {
    this.joyTimer = null;
    const axes = this.pendingAxes;
    this.pendingAxes = null;
    if (axes === null || !this.pilotingEnabled) return;
    this.sendJoystick(axes, Date.now());
  }

  private cancelJoystick(): void {
    if (this.joyTimer !== null) {
      clearTimeout(this.joyTimer);
      this.joyTimer = null;
    }
    this.pendingAxes = null;
  }
}
