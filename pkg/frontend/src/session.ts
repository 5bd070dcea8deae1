/** Client session state machine, independent of the DOM and of WebSocket.
 *
 * Two invariants live here:
 *  - at most one control message goes out per server tick: a control send is
 *    armed by each incoming `state` message and disarmed by the send, so a
 *    fast client can never flood the server;
 *  - recording cannot start without a declared target speed.
 *
 * Frames are coalesced: only the newest undrawn frame is kept, so a slow
 *  renderer drops frames instead of queueing them.
 */

import type {
  Action, FrameMsg, HelloMsg, LogMsg, RecordAckMsg, ServerMessage, StateMsg,
} from "./protocol.js";
import {
  controlMessage, modeMessage, parseServerMessage,
  recordOffMessage, recordOnMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
}

export interface SessionEvents {
  hello: (msg: HelloMsg) => void;
  state: (msg: StateMsg) => void;
  record: (msg: RecordAckMsg) => void;
  log: (msg: LogMsg) => void;
  error: (message: string) => void;
  bye: () => void;
}

/** Parse a record-target text field; null when it is not a positive number. */
export function parseTargetSpeed(text: string): number | null {
  const v = Number(text.trim());
  return Number.isFinite(v) && v > 0 ? v : null;
}

export class ClientSession {
  hello: HelloMsg | null = null;
  lastState: StateMsg | null = null;
  /** acknowledged by the server (lastState.recording is the live flag) */
  recordAck: RecordAckMsg | null = null;

  private pendingFrame: FrameMsg | null = null;
  private controlArmed = false;
  private listeners: { [K in keyof SessionEvents]?: SessionEvents[K][] } = {};

  constructor(private readonly sock: SocketLike) {}

  on<K extends keyof SessionEvents>(event: K, cb: SessionEvents[K]): void {
    const arr = (this.listeners[event] ??= []) as SessionEvents[K][];
    arr.push(cb);
  }

  private emit<K extends keyof SessionEvents>(
    event: K, ...args: Parameters<SessionEvents[K]>): void {
    for (const cb of this.listeners[event] ?? []) {
      (cb as (...a: Parameters<SessionEvents[K]>) => void)(...args);
    }
  }

  /** Feed one raw socket message. */
  handleRaw(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(raw);
    } catch (e) {
      this.emit("error", e instanceof Error ? e.message : String(e));
      return;
    }
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        this.emit("hello", msg);
        break;
      case "state":
        this.lastState = msg;
        this.controlArmed = true; // one control per server tick
        this.emit("state", msg);
        break;
      case "frame":
        this.pendingFrame = msg; // overwrite: missed frames are dropped
        break;
      case "record":
        this.recordAck = msg;
        this.emit("record", msg);
        break;
      case "log":
        this.emit("log", msg);
        break;
      case "error":
        this.emit("error", msg.message);
        break;
      case "bye":
        this.emit("bye");
        break;
    }
  }

  /** Newest undrawn frame, or null; taking it clears the slot. */
  takeFrame(): FrameMsg | null {
    const f = this.pendingFrame;
    this.pendingFrame = null;
    return f;
  }

  /** Send a control if one is armed for this tick; returns whether it went. */
  sendControl(action: Action): boolean {
    if (!this.controlArmed) return false;
    this.controlArmed = false;
    this.sock.send(JSON.stringify(controlMessage(action)));
    return true;
  }

  get mode(): string {
    return this.lastState?.mode ?? "teleop";
  }

  get recording(): boolean {
    return this.lastState?.recording ?? false;
  }

  modes(): string[] {
    return this.hello?.modes ?? [];
  }

  /** The record panel is usable only once a valid target speed is entered. */
  canStartRecording(targetText: string): boolean {
    return parseTargetSpeed(targetText) !== null && !this.recording;
  }

  startRecording(targetSpeed: number, path?: string): void {
    if (!(Number.isFinite(targetSpeed) && targetSpeed > 0)) {
      throw new Error("target speed required to start recording");
    }
    this.sock.send(JSON.stringify(recordOnMessage(targetSpeed, path)));
  }

  stopRecording(path?: string): void {
    this.sock.send(JSON.stringify(recordOffMessage(path)));
  }

  setMode(mode: string, targetSpeed?: number): void {
    if (this.hello && !this.hello.modes.includes(mode)) {
      throw new Error(`mode not offered by server: ${mode}`);
    }
    this.sock.send(JSON.stringify(modeMessage(mode, targetSpeed)));
  }

  requestLog(): void {
    this.sock.send(JSON.stringify({ type: "log" }));
  }

  sayBye(): void {
    this.sock.send(JSON.stringify({ type: "bye" }));
  }
}
