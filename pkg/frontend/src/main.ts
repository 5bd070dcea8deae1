/** Page shell: socket lifecycle, device events, DOM, and the render loop. */

import { InputMap, NO_KEYS, type KeyState, type PadState } from "./input.js";
import { MODE_TELEOP, type HelloMsg, type LogMsg } from "./protocol.js";
import { ClientSession, parseTargetSpeed } from "./session.js";
import { GGTrail, polylineBounds, type Bounds } from "./telemetry.js";
import { drawFrame, drawGG, drawGauges, drawMinimap } from "./render.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const cameraCanvas = $<HTMLCanvasElement>("camera");
const minimapCanvas = $<HTMLCanvasElement>("minimap");
const gaugesCanvas = $<HTMLCanvasElement>("gauges");
const ggCanvas = $<HTMLCanvasElement>("gg");
const ctx = {
  camera: cameraCanvas.getContext("2d")!,
  minimap: minimapCanvas.getContext("2d")!,
  gauges: gaugesCanvas.getContext("2d")!,
  gg: ggCanvas.getContext("2d")!,
};

const serverInput = $<HTMLInputElement>("server-url");
const connectBtn = $<HTMLButtonElement>("connect");
const statusEl = $("status");
const modesEl = $("modes");
const targetInput = $<HTMLInputElement>("target-speed");
const savePathInput = $<HTMLInputElement>("save-path");
const recordBtn = $<HTMLButtonElement>("record");
const recordStatusEl = $("record-status");
const logBtn = $<HTMLButtonElement>("download-log");
const telemetryEl = $("telemetry");

const params = new URLSearchParams(location.search);
serverInput.value = params.get("server")
  ?? `ws://${location.hostname || "localhost"}:8700/ws`;

// -- device state ------------------------------------------------------------

const keys: KeyState = { ...NO_KEYS };
const KEYMAP: Record<string, keyof KeyState> = {
  ArrowLeft: "left", ArrowRight: "right", ArrowUp: "up", ArrowDown: "down",
};
window.addEventListener("keydown", (e) => {
  const k = KEYMAP[e.key];
  if (k) { keys[k] = true; e.preventDefault(); }
});
window.addEventListener("keyup", (e) => {
  const k = KEYMAP[e.key];
  if (k) { keys[k] = false; e.preventDefault(); }
});
window.addEventListener("blur", () => Object.assign(keys, NO_KEYS));

/** Standard-mapping gamepad: left stick X steers (stick right = steer right
 * = negative wire steering), right/left triggers are throttle/brake. */
function samplePad(): PadState | null {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  for (const pad of pads) {
    if (!pad || !pad.connected) continue;
    return {
      steering: -(pad.axes[0] ?? 0),
      throttle: pad.buttons[7]?.value ?? 0,
      brake: pad.buttons[6]?.value ?? 0,
    };
  }
  return null;
}

// -- session -----------------------------------------------------------------

let ws: WebSocket | null = null;
let session: ClientSession | null = null;
let bounds: Bounds | null = null;
let hello: HelloMsg | null = null;
const input = new InputMap();
const gg = new GGTrail(10);
let frameDrawnAt = 0;      // performance.now() of the last camera draw
let frameDecodeBusy = false;

function setStatus(text: string, cls: string): void {
  statusEl.textContent = text;
  statusEl.className = `badge ${cls}`;
}

function connect(): void {
  ws?.close();
  gg.clear();
  input.reset();
  bounds = null;
  hello = null;
  setStatus("connecting…", "warn");

  const sock = new WebSocket(serverInput.value);
  ws = sock;
  const sess = new ClientSession(sock);
  session = sess;

  sock.onmessage = (ev) => sess.handleRaw(String(ev.data));
  sock.onclose = () => {
    if (ws === sock) setStatus("disconnected", "err");
  };
  sock.onerror = () => {
    if (ws === sock) setStatus("socket error", "err");
  };

  sess.on("hello", (h) => {
    hello = h;
    bounds = polylineBounds(h.track.polyline);
    setStatus(`connected · ${h.track.name} · session ${h.session.slice(0, 8)}`, "ok");
    buildModeButtons(h);
  });

  sess.on("state", (st) => {
    // one input update and at most one control per server tick
    if (st.mode === MODE_TELEOP) {
      sess.sendControl(input.update(hello?.dt ?? 0.05, keys, samplePad()));
    } else {
      input.update(hello?.dt ?? 0.05, keys, samplePad()); // keep ramps warm
    }
    gg.push({ t: st.t, aLat: st.a_lat, aLong: st.a_long });
    telemetryEl.textContent =
      `tick ${st.tick} · mode ${st.mode} · s ${st.s.toFixed(1)} m · ` +
      `cte ${st.cte.toFixed(2)} m · ` +
      `${st.recording ? "REC " : ""}` +
      `frame age ${Math.max(0, performance.now() - frameDrawnAt).toFixed(0)} ms`;
    refreshRecordPanel();
  });

  sess.on("record", (ack) => {
    const bits = [`${ack.on ? "recording" : "stopped"}`, `${ack.samples} samples`];
    if (ack.path) bits.push(`saved ${ack.path}`);
    if (ack.digest) bits.push(`digest ${ack.digest.slice(0, 12)}…`);
    recordStatusEl.textContent = bits.join(" · ");
  });

  sess.on("log", downloadLog);
  sess.on("error", (m) => { recordStatusEl.textContent = `server error: ${m}`; });
  sess.on("bye", () => sock.close());
}

connectBtn.addEventListener("click", connect);

// -- mode buttons ------------------------------------------------------------

function buildModeButtons(h: HelloMsg): void {
  modesEl.textContent = "";
  for (const mode of h.modes) {
    const btn = document.createElement("button");
    btn.textContent = mode;
    btn.addEventListener("click", () => {
      const target = parseTargetSpeed(targetInput.value);
      session?.setMode(mode, target ?? undefined);
    });
    modesEl.appendChild(btn);
  }
}

// -- record panel ------------------------------------------------------------

function refreshRecordPanel(): void {
  if (!session) { recordBtn.disabled = true; return; }
  if (session.recording) {
    recordBtn.disabled = false;
    recordBtn.textContent = "stop recording";
  } else {
    // record stays disabled until a target speed is entered
    recordBtn.disabled = !session.canStartRecording(targetInput.value);
    recordBtn.textContent = "record";
  }
}
targetInput.addEventListener("input", refreshRecordPanel);

recordBtn.addEventListener("click", () => {
  if (!session) return;
  const path = savePathInput.value.trim() || undefined;
  if (session.recording) {
    session.stopRecording(path);
  } else {
    const target = parseTargetSpeed(targetInput.value);
    if (target !== null) session.startRecording(target, path);
  }
});

logBtn.addEventListener("click", () => session?.requestLog());

function downloadLog(log: LogMsg): void {
  const blob = new Blob([JSON.stringify(log)], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `styleforge-log-${log.session.slice(0, 8)}.json`;
  a.click();
  URL.revokeObjectURL(a.href);
}

// -- render loop -------------------------------------------------------------

function pumpFrame(): void {
  if (!session || frameDecodeBusy) return;
  const frame = session.takeFrame(); // coalesced: always the newest
  if (!frame) return;
  frameDecodeBusy = true;
  const img = new Image();
  img.onload = () => {
    drawFrame(ctx.camera, img);
    frameDrawnAt = performance.now();
    frameDecodeBusy = false;
  };
  img.onerror = () => { frameDecodeBusy = false; };
  img.src = `data:image/png;base64,${frame.data}`;
}

function renderLoop(): void {
  pumpFrame();
  if (hello && bounds) {
    drawMinimap(ctx.minimap, hello.track, bounds, session?.lastState ?? null);
  }
  drawGauges(ctx.gauges, session?.lastState ?? null, 30);
  drawGG(ctx.gg, gg.points(), gg.windowSec);
  requestAnimationFrame(renderLoop);
}

requestAnimationFrame(renderLoop);
refreshRecordPanel();
connect();
