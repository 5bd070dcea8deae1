"""Interactive session server.

One websocket = one session = one simulated vehicle. The server drives time:
every tick (20 Hz) it applies the session's pending control (teleop) or the
loaded policy's output (autopilot), steps the simulator, and pushes a state
message plus a losslessly compressed camera frame. If recording is on, each
tick also appends a sample with the declared target speed.

Wire protocol (JSON text messages, version 1) — every message carries the
session id and tick:

  server->client
    hello  {type, version, session, tick, track{name,total_length,
            lane_half_width,polyline}, camera{...}, dt, modes[...]}
    state  {type, session, tick, t, x, y, heading, speed, s, cte, section,
            a_long, a_lat, mode, recording, target_speed,
            action{steering,throttle,brake}}
    frame  {type, session, tick, encoding: "png", data: base64}
    record {type, session, tick, on, samples, path?, digest?}   (ack)
    log    {type, session, tick, start{...}, ticks[[steering,throttle,brake,
            recording,target_speed], ...]}
    error  {type, session, tick, message}
    bye    {type, session, tick}

  client->server
    control {type, action{steering,throttle,brake}}
    record  {type, on, target_speed?, path?}
    mode    {type, mode: teleop|autopilot-bdm|autopilot-ndst, target_speed?}
    log     {type}
    bye     {type}

Teleop safety: after 1 s without a control message the last control is held
for up to 0.5 s more, then replaced by a safe stop (zero steering/throttle,
half brake). Before the first control arrives the vehicle simply coasts.

A session's control log replayed through `replay_log` reproduces the
recorded dataset bit for bit (fixed dt, deterministic sim and renderer).
"""

import asyncio
import base64
import io
import itertools
import json
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import DataError
from .models import BdmModel, PbModel, load_model, make_policy
from .simcore import (ActionTriple, CameraConfig, TrackGeometry, VehicleParams,
                      VehicleState, render_observation, step, track_frame)
from .training.dataset import NUM_COLS, Dataset, encode_image, save_dataset

PROTOCOL_VERSION = 1
TICK_HZ = 20
TICK_DT = 1.0 / TICK_HZ
STALL_HOLD_AFTER = 1.0      # seconds without control before the hold window
STALL_STOP_AFTER = 1.5      # seconds without control before the safe stop
SAFE_STOP = ActionTriple(steering=0.0, throttle=0.0, brake=0.5)

MODE_TELEOP = "teleop"
MODE_BDM = "autopilot-bdm"
MODE_NDST = "autopilot-ndst"

_session_counter = itertools.count(1)


def encode_frame_png(obs: np.ndarray) -> str:
    """Observation floats -> 8-bit grayscale PNG -> base64 (lossless)."""
    from PIL import Image
    img8 = np.round(np.asarray(obs) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(img8, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


@dataclass
class RecordedTick:
    action: Tuple[float, float, float]
    recording: bool
    target_speed: float


@dataclass
class Session:
    geom: TrackGeometry
    camera: CameraConfig
    vehicle: VehicleParams
    bdm: Optional[BdmModel] = None
    pb: Optional[PbModel] = None
    dt: float = TICK_DT

    def __post_init__(self):
        self.id = f"s{next(_session_counter):04d}"
        self.tick = 0
        self.mode = MODE_TELEOP
        self.pending_mode: Optional[str] = None
        self.target_speed = 20.0
        x, y = self.geom.point_at(0.0)
        self.state = VehicleState(x=x, y=y, heading=self.geom.heading_at(0.0),
                                  speed=0.0)
        self.start_state = self.state
        self.pending = ActionTriple(0.0, 0.0, 0.0)
        self.last_control_time: Optional[float] = None
        self.recording = False
        self.record_path: Optional[str] = None
        self._rec_images: List[np.ndarray] = []
        self._rec_scalars: List[Tuple] = []
        self._rec_sections: List[int] = []
        self._rec_episode_starts: List[int] = []
        self.control_log: List[RecordedTick] = []
        self._policy = None
        self._prev_speed: Optional[float] = None

    # -- policies -----------------------------------------------------------

    def available_modes(self) -> List[str]:
        modes = [MODE_TELEOP]
        if self.bdm is not None:
            modes.append(MODE_BDM)
            if self.pb is not None:
                modes.append(MODE_NDST)
        return modes

    def _make_policy(self):
        if self.mode == MODE_BDM:
            return make_policy(self.bdm, None, self.target_speed)
        if self.mode == MODE_NDST:
            return make_policy(self.bdm, self.pb, self.target_speed)
        return None

    # -- message handling (called from the socket reader) --------------------

    def handle(self, msg: dict, now: float) -> Optional[dict]:
        """Apply one client message; returns an immediate reply or None."""
        mtype = msg.get("type")
        if mtype == "control":
            action = msg.get("action") or {}
            try:
                self.pending = ActionTriple(
                    steering=float(action["steering"]),
                    throttle=float(action["throttle"]),
                    brake=float(action["brake"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"malformed control payload: {exc}")
            self.last_control_time = now
            return None
        if mtype == "record":
            return self._handle_record(msg)
        if mtype == "mode":
            mode = msg.get("mode")
            if mode not in self.available_modes():
                raise DataError(f"unknown or unavailable mode: {mode!r}")
            if "target_speed" in msg:
                self.target_speed = float(msg["target_speed"])
            self.pending_mode = mode   # applied at the next tick boundary
            return None
        if mtype == "log":
            return self.log_message()
        if mtype == "bye":
            return {"type": "bye", "session": self.id, "tick": self.tick}
        raise DataError(f"unknown message type: {mtype!r}")

    def _handle_record(self, msg: dict) -> dict:
        on = bool(msg.get("on"))
        if on:
            if "target_speed" not in msg:
                raise DataError("target speed required to start recording")
            self.target_speed = float(msg["target_speed"])
            if not self.recording:
                self._rec_episode_starts.append(len(self._rec_images))
                self.recording = True
            self.record_path = msg.get("path", self.record_path)
            return {"type": "record", "session": self.id, "tick": self.tick,
                    "on": True, "samples": len(self._rec_images)}
        self.recording = False
        self.record_path = msg.get("path", self.record_path)
        reply = {"type": "record", "session": self.id, "tick": self.tick,
                 "on": False, "samples": len(self._rec_images)}
        if self.record_path and self._rec_images:
            dataset = self.dataset()
            save_dataset(dataset, self.record_path)
            reply["path"] = self.record_path
            reply["digest"] = dataset.digest()
        return reply

    # -- per-tick work -------------------------------------------------------

    def _teleop_action(self, now: float) -> ActionTriple:
        if self.last_control_time is None:
            return ActionTriple(0.0, 0.0, 0.0)   # nothing yet: coast
        age = now - self.last_control_time
        if age > STALL_STOP_AFTER:
            return SAFE_STOP
        return self.pending   # includes the <=0.5 s hold window past 1 s

    def advance(self, now: float) -> Tuple[dict, dict]:
        """One tick: choose action, record, step; returns (state, frame) msgs."""
        if self.pending_mode is not None:
            self.mode = self.pending_mode
            self.pending_mode = None
            self._policy = self._make_policy()
        frame = track_frame(self.state, self.geom)
        obs = render_observation(self.state, self.geom, self.camera)
        if self.mode == MODE_TELEOP:
            action = self._teleop_action(now)
        else:
            if self._policy is None:
                self._policy = self._make_policy()
            action = self._policy(obs, self.state.speed)

        if self.recording:
            self._rec_images.append(encode_image(obs))
            self._rec_scalars.append((self.state.speed, action.steering,
                                      action.throttle, action.brake,
                                      self.target_speed, self.tick * self.dt))
            self._rec_sections.append(frame.section)
        self.control_log.append(RecordedTick(
            action=action.as_tuple(), recording=self.recording,
            target_speed=self.target_speed))

        prev = self._prev_speed if self._prev_speed is not None else self.state.speed
        a_long = (self.state.speed - prev) / self.dt
        a_lat = self.state.speed ** 2 * self.geom.curvature_at(frame.s)
        self._prev_speed = self.state.speed

        state_msg = {
            "type": "state", "session": self.id, "tick": self.tick,
            "t": round(self.tick * self.dt, 6),
            "x": self.state.x, "y": self.state.y,
            "heading": self.state.heading, "speed": self.state.speed,
            "s": frame.s, "cte": frame.cross_track_error,
            "section": int(frame.section),
            "a_long": a_long, "a_lat": a_lat,
            "mode": self.mode, "recording": self.recording,
            "target_speed": self.target_speed,
            "action": {"steering": action.steering, "throttle": action.throttle,
                       "brake": action.brake},
        }
        frame_msg = {
            "type": "frame", "session": self.id, "tick": self.tick,
            "encoding": "png", "data": encode_frame_png(obs),
        }
        self.state = step(self.state, action, self.vehicle, self.dt)
        self.tick += 1
        return state_msg, frame_msg

    # -- artifacts -----------------------------------------------------------

    def dataset(self) -> Dataset:
        if not self._rec_images:
            raise DataError("no recorded samples in this session")
        scalars = np.array(self._rec_scalars, dtype=np.float64).reshape(-1, NUM_COLS)
        starts = [s for s in self._rec_episode_starts if s < len(self._rec_images)]
        return Dataset(camera=self.camera, track=self.geom.name,
                       driver=f"teleop-{self.id}", dt=self.dt,
                       images=np.stack(self._rec_images),
                       scalars=scalars,
                       sections=np.array(self._rec_sections, dtype=np.uint8),
                       episode_starts=starts or [0],
                       meta={"session": self.id, "mode": "teleop"})

    def log_message(self) -> dict:
        return {
            "type": "log", "session": self.id, "tick": self.tick,
            "track": self.geom.name, "dt": self.dt,
            "camera": self.camera.to_dict(),
            "start": {"x": self.start_state.x, "y": self.start_state.y,
                      "heading": self.start_state.heading,
                      "speed": self.start_state.speed},
            "ticks": [[*rt.action, rt.recording, rt.target_speed]
                      for rt in self.control_log],
        }


def replay_log(log: dict, geom: TrackGeometry,
               vehicle: Optional[VehicleParams] = None) -> Dataset:
    """Headless re-execution of a session control log; bit-identical dataset."""
    vehicle = vehicle or VehicleParams()
    camera = CameraConfig.from_dict(log["camera"])
    dt = float(log["dt"])
    start = log["start"]
    state = VehicleState(x=float(start["x"]), y=float(start["y"]),
                         heading=float(start["heading"]),
                         speed=float(start["speed"]))
    images, scalars, sections = [], [], []
    episode_starts = []
    prev_recording = False
    session_id = log.get("session", "replay")
    for k, entry in enumerate(log["ticks"]):
        steering, throttle, brake, recording, target_speed = entry
        action = ActionTriple(steering=float(steering), throttle=float(throttle),
                              brake=float(brake))
        if recording:
            if not prev_recording:
                episode_starts.append(len(images))
            frame = track_frame(state, geom)
            obs = render_observation(state, geom, camera)
            images.append(encode_image(obs))
            scalars.append((state.speed, action.steering, action.throttle,
                            action.brake, float(target_speed), k * dt))
            sections.append(frame.section)
        prev_recording = bool(recording)
        state = step(state, action, vehicle, dt)
    if not images:
        raise DataError("control log contains no recorded ticks")
    return Dataset(camera=camera, track=log["track"],
                   driver=f"teleop-{session_id}", dt=dt,
                   images=np.stack(images),
                   scalars=np.array(scalars, dtype=np.float64).reshape(-1, NUM_COLS),
                   sections=np.array(sections, dtype=np.uint8),
                   episode_starts=episode_starts or [0],
                   meta={"session": session_id, "mode": "teleop"})


# -- app --------------------------------------------------------------------

def create_app(geom: TrackGeometry, bdm: Optional[BdmModel] = None,
               pb: Optional[PbModel] = None,
               vehicle: Optional[VehicleParams] = None,
               camera: Optional[CameraConfig] = None):
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="styleforge session service")
    app.state.geom = geom
    app.state.sessions = {}
    vehicle = vehicle or VehicleParams()
    camera = camera or CameraConfig()

    @app.get("/health")
    async def health():
        return {"ok": True, "track": geom.name,
                "sessions": len(app.state.sessions)}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(geom=geom, camera=camera, vehicle=vehicle,
                          bdm=bdm, pb=pb)
        app.state.sessions[session.id] = session
        loop = asyncio.get_running_loop()
        send_lock = asyncio.Lock()

        polyline = geom.centerline_polyline(step=10.0)
        hello = {
            "type": "hello", "version": PROTOCOL_VERSION,
            "session": session.id, "tick": 0,
            "dt": session.dt,
            "track": {"name": geom.name,
                      "total_length": geom.total_length,
                      "lane_half_width": geom.lane_half_width,
                      "polyline": [[round(float(x), 3), round(float(y), 3)]
                                   for x, y in polyline]},
            "camera": camera.to_dict(),
            "modes": session.available_modes(),
        }
        await ws.send_text(json.dumps(hello))

        async def tick_loop():
            next_t = loop.time()
            while True:
                state_msg, frame_msg = session.advance(loop.time())
                async with send_lock:
                    await ws.send_text(json.dumps(state_msg))
                    await ws.send_text(json.dumps(frame_msg))
                next_t += session.dt
                delay = next_t - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_t = loop.time()   # fell behind: drop the deficit

        ticker = asyncio.create_task(tick_loop())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise DataError("message must be a JSON object")
                    reply = session.handle(msg, loop.time())
                except DataError as exc:
                    reply = {"type": "error", "session": session.id,
                             "tick": session.tick, "message": str(exc)}
                except (TypeError, ValueError, KeyError) as exc:
                    reply = {"type": "error", "session": session.id,
                             "tick": session.tick,
                             "message": f"malformed message: {exc}"}
                if reply is not None:
                    async with send_lock:
                        await ws.send_text(json.dumps(reply))
                    if reply.get("type") == "bye":
                        break
        except WebSocketDisconnect:
            pass
        finally:
            ticker.cancel()
            try:
                await ticker
            except (asyncio.CancelledError, Exception):
                pass
            app.state.sessions.pop(session.id, None)

    return app


def run_server(host: str, port: int, track: str,
               bdm_path: Optional[str] = None, pb_path: Optional[str] = None):
    import uvicorn

    from .cli import resolve_track_path
    from .simcore import build_track, load_track

    geom = build_track(load_track(resolve_track_path(track)))
    bdm = load_model(bdm_path) if bdm_path else None
    pb = load_model(pb_path) if pb_path else None
    if pb is not None and bdm is None:
        raise DataError("an adapter bundle requires a base-model bundle")
    app = create_app(geom, bdm=bdm, pb=pb)
    print(f"styleforge service on ws://{host}:{port}/ws "
          f"(track {geom.name}, modes: teleop"
          f"{', autopilot' if bdm else ''})")
    uvicorn.run(app, host=host, port=port, log_level="warning")
