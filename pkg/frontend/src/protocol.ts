/** JSON message shapes spoken over the telemetry bridge websocket.
 *
 * schema/telemetry.schema.json at the repo root is the contract; the zod
 * parsers here enforce the server side of it at runtime so a malformed
 * frame can never reach the UI, and the builder helpers produce the client
 * side so every outbound message has one construction point.
 */
import { z } from "zod";

export const MODE_NAMES = [
  "manual_constant",
  "manual_incremental",
  "station_keep",
] as const;
export type ModeName = (typeof MODE_NAMES)[number];

const num = z.number();

export const vec6Schema = z.tuple([num, num, num, num, num, num]);
export type Vec6 = z.infer<typeof vec6Schema>;

export const pointSchema = z.tuple([num, num]);
export type Point = z.infer<typeof pointSchema>;

export const ZERO_AXES: Vec6 = [0, 0, 0, 0, 0, 0];

// -- server -> client ---------------------------------------------------------

export const helloSchema = z.object({
  type: z.literal("hello"),
  version: z.number().int().min(1),
  tick_s: num.positive(),
  mode_names: z.array(z.string()).optional(),
  thrust_limits: z
    .object({
      min: z.array(num.max(0)).length(8),
      max: z.array(num.min(0)).length(8),
    })
    .optional(),
});
export type Hello = z.infer<typeof helloSchema>;

export const telemetrySchema = z.object({
  type: z.literal("telemetry"),
  timestamp_us: z.number().int().nonnegative(),
  pose: z.object({ x: num, y: num, z: num, roll: num, pitch: num, yaw: num }),
  rates: z.object({ u: num, v: num, w: num, p: num, q: num, r: num }),
  depth_m: num,
  pressure_kpa: num,
  water_temp_c: num,
  battery_v: num,
  mode: z.enum(MODE_NAMES),
  thrust: z.array(num).length(8),
  faults: z.object({
    bits: z.number().int().min(0).max(255),
    allocation: z.boolean(),
    leak: z.boolean(),
    estop: z.boolean(),
  }),
  manip: z.object({ yaw: num, jaw: num }),
  leak: z.boolean(),
});
export type Telemetry = z.infer<typeof telemetrySchema>;

export const ackSchema = z.object({
  type: z.literal("ack"),
  command: z.string(),
});
export type Ack = z.infer<typeof ackSchema>;

export const errorSchema = z.object({
  type: z.literal("error"),
  error: z.string(),
  detail: z.string().optional(),
});
export type BridgeError = z.infer<typeof errorSchema>;

export const annotationSchema = z.object({
  label: z.string(),
  box: z.tuple([num, num, num, num]),
  length_m: num.optional(),
});
export type Annotation = z.infer<typeof annotationSchema>;

export const frameSchema = z.object({
  type: z.literal("frame"),
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  png_base64: z.string(),
  annotations: z.array(annotationSchema).optional(),
});
export type FrameMsg = z.infer<typeof frameSchema>;

export const calibrationSchema = z.object({
  type: z.literal("calibration"),
  pixels_per_meter: num.positive(),
  reference_length_m: num.positive().optional(),
});
export type Calibration = z.infer<typeof calibrationSchema>;

export const measurementSchema = z.object({
  type: z.literal("measurement"),
  length_m: num.nonnegative(),
});
export type Measurement = z.infer<typeof measurementSchema>;

export const serverMessageSchema = z.discriminatedUnion("type", [
  helloSchema,
  telemetrySchema,
  ackSchema,
  errorSchema,
  frameSchema,
  calibrationSchema,
  measurementSchema,
]);
export type ServerMessage = z.infer<typeof serverMessageSchema>;

/** Parse one websocket text payload; throws on anything off-contract. */
export function parseServerMessage(raw: string): ServerMessage {
  return serverMessageSchema.parse(JSON.parse(raw));
}

// -- client -> server ---------------------------------------------------------

export interface JoystickMsg {
  type: "joystick";
  axes: Vec6;
  seq: number;
}
export interface SetModeMsg {
  type: "set_mode";
  mode: ModeName;
}
export interface SetHoldSetpointMsg {
  type: "set_hold_setpoint";
  pose: Vec6;
}
export interface ManipMsg {
  type: "manip";
  yaw_rate: number;
  jaw_rate: number;
}
export interface TrimFfMsg {
  type: "trim_ff";
  wrench: Vec6;
}
export interface EmergencyStopMsg {
  type: "emergency_stop";
}
export interface GetFrameMsg {
  type: "get_frame";
}
export interface CalibrateMsg {
  type: "calibrate";
  p1: Point;
  p2: Point;
  length_m: number;
}
export interface MeasureMsg {
  type: "measure";
  p1: Point;
  p2: Point;
  subpixel?: boolean;
}

export type ClientMessage =
  | JoystickMsg
  | SetModeMsg
  | SetHoldSetpointMsg
  | ManipMsg
  | TrimFfMsg
  | EmergencyStopMsg
  | GetFrameMsg
  | CalibrateMsg
  | MeasureMsg;

export const joystickMsg = (axes: Vec6, seq: number): JoystickMsg => ({
  type: "joystick",
  axes,
  seq,
});

export const setModeMsg = (mode: ModeName): SetModeMsg => ({
  type: "set_mode",
  mode,
});

export const setHoldSetpointMsg = (pose: Vec6): SetHoldSetpointMsg => ({
  type: "set_hold_setpoint",
  pose,
});

export const manipMsg = (yawRate: number, jawRate: number): ManipMsg => ({
  type: "manip",
  yaw_rate: yawRate,
  jaw_rate: jawRate,
});

export const trimFfMsg = (wrench: Vec6): TrimFfMsg => ({
  type: "trim_ff",
  wrench,
});

export const emergencyStopMsg = (): EmergencyStopMsg => ({
  type: "emergency_stop",
});

export const getFrameMsg = (): GetFrameMsg => ({ type: "get_frame" });

export const calibrateMsg = (
  p1: Point,
  p2: Point,
  lengthM: number,
): CalibrateMsg => ({ type: "calibrate", p1, p2, length_m: lengthM });

export const measureMsg = (
  p1: Point,
  p2: Point,
  subpixel = true,
): MeasureMsg => ({ type: "measure", p1, p2, subpixel });
