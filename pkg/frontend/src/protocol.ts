/** Wire protocol spoken by the styleforge session server.
 *
 * Transport is a WebSocket carrying JSON text messages, one object per
 * message, each tagged with a `type` field.  The server greets with `hello`
 * (protocol version, track geometry, camera, available modes), then sends a
 * `state` + `frame` pair every tick.  The client sends `control`, `record`,
 * `mode`, `log` and `bye`.
 */

export const PROTOCOL_VERSION = 1;

export interface Action {
  steering: number; // [-1, 1], positive steers left
  throttle: number; // [0, 1]
  brake: number;    // [0, 1]
}

export function clampAction(a: Action): Action {
  const clip = (v: number, lo: number, hi: number) =>
    Math.min(hi, Math.max(lo, Number.isFinite(v) ? v : 0));
  return {
    steering: clip(a.steering, -1, 1),
    throttle: clip(a.throttle, 0, 1),
    brake: clip(a.brake, 0, 1),
  };
}

// -- server -> client --------------------------------------------------------

export interface TrackInfo {
  name: string;
  total_length: number;
  lane_half_width: number;
  polyline: [number, number][];
}

export interface CameraInfo {
  width: number;
  height: number;
  horizontal_fov: number;
  camera_height: number;
  max_draw_distance: number;
}

export interface HelloMsg {
  type: "hello";
  version: number;
  session: string;
  tick: number;
  dt: number;
  track: TrackInfo;
  camera: CameraInfo;
  modes: string[];
}

export interface StateMsg {
  type: "state";
  session: string;
  tick: number;
  t: number;
  x: number;
  y: number;
  heading: number;
  speed: number;
  s: number;
  cte: number;
  section: number;
  a_long: number;
  a_lat: number;
  mode: string;
  recording: boolean;
  target_speed: number | null;
  action: Action;
}

export interface FrameMsg {
  type: "frame";
  session: string;
  tick: number;
  encoding: "png";
  data: string; // base64
}

export interface RecordAckMsg {
  type: "record";
  session: string;
  tick: number;
  on: boolean;
  samples: number;
  path?: string;
  digest?: string;
}

export interface LogMsg {
  type: "log";
  session: string;
  tick: number;
  track: string;
  dt: number;
  camera: Record<string, number>;
  start: { x: number; y: number; heading: number; speed: number };
  ticks: [number, number, number, boolean, number | null][];
}

export interface ErrorMsg {
  type: "error";
  session: string;
  tick: number;
  message: string;
}

export interface ByeMsg {
  type: "bye";
  session: string;
  tick: number;
}

export type ServerMessage =
  | HelloMsg
  | StateMsg
  | FrameMsg
  | RecordAckMsg
  | LogMsg
  | ErrorMsg
  | ByeMsg;

const SERVER_TYPES = new Set([
  "hello", "state", "frame", "record", "log", "error", "bye",
]);

export class ProtocolError extends Error {}

/** Parse one raw server message; throws ProtocolError on anything malformed. */
export function parseServerMessage(raw: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new ProtocolError("message is not valid JSON");
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("message is not a JSON object");
  }
  const msg = obj as { type?: unknown };
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) {
    throw new ProtocolError(`unknown server message type: ${String(msg.type)}`);
  }
  if (msg.type === "hello") {
    const hello = msg as Partial<HelloMsg>;
    if (hello.version !== PROTOCOL_VERSION) {
      throw new ProtocolError(
        `unsupported protocol version ${String(hello.version)} ` +
        `(client speaks ${PROTOCOL_VERSION})`);
    }
    if (!hello.track || !Array.isArray(hello.track.polyline) ||
        typeof hello.dt !== "number" || !Array.isArray(hello.modes)) {
      throw new ProtocolError("hello message missing track/dt/modes");
    }
  }
  return msg as ServerMessage;
}

// -- client -> server --------------------------------------------------------

export interface ControlMsg {
  type: "control";
  action: Action;
}

export interface RecordMsg {
  type: "record";
  on: boolean;
  target_speed?: number;
  path?: string;
}

export interface ModeMsg {
  type: "mode";
  mode: string;
  target_speed?: number;
}

export interface LogRequestMsg {
  type: "log";
}

export interface ByeRequestMsg {
  type: "bye";
}

export type ClientMessage =
  | ControlMsg
  | RecordMsg
  | ModeMsg
  | LogRequestMsg
  | ByeRequestMsg;

export function controlMessage(action: Action): ControlMsg {
  return { type: "control", action: clampAction(action) };
}

export function recordOnMessage(targetSpeed: number, path?: string): RecordMsg {
  const msg: RecordMsg = { type: "record", on: true, target_speed: targetSpeed };
  if (path) msg.path = path;
  return msg;
}

export function recordOffMessage(path?: string): RecordMsg {
  const msg: RecordMsg = { type: "record", on: false };
  if (path) msg.path = path;
  return msg;
}

export function modeMessage(mode: string, targetSpeed?: number): ModeMsg {
  const msg: ModeMsg = { type: "mode", mode };
  if (targetSpeed !== undefined) msg.target_speed = targetSpeed;
  return msg;
}

export const MODE_TELEOP = "teleop";
export const MODE_AUTOPILOT_BASE = "autopilot-bdm";
export const MODE_AUTOPILOT_STYLED = "autopilot-ndst";
