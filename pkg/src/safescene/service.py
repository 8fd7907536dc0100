"""Operator control plane: every console button is one endpoint.

State machine:

    idle --run/start--> live_running --run/stop--> idle
    idle --replay/open--> replaying --replay/close--> idle

Pipeline stages gate each other (camera needs the live run, pose needs the
camera, the monitor needs pose), recording needs the live run, and replay
is never allowed concurrently with it. Every endpoint is callable in any
state: the answer is a state change, a no-op acknowledgment, or a typed
error, never a crash.

All transitions are serialized through one lock, and the frame drivers
(tick_live / tick_replay) take the same lock, so commands land between
frames, never inside one.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from pathlib import Path

from pydantic import BaseModel

from .config import SceneConfig
from .errors import (
    ApiError,
    BadRequest,
    DependencyNotRunning,
    InvalidTransition,
    NotFound,
    RecordingError,
)
from .recording import load, session_filename
from .replay import ReplaySession, SceneFrame, monitor_for
from .scene import FSM_RUNNING, LiveLoop, LiveTick
from .telemetry import (
    FlagChangedEvent,
    FrameEvent,
    PeriodClosedEvent,
    StateChangedEvent,
    TelemetryHub,
    WarningEvent,
    sample_to_dict,
)

logger = logging.getLogger(__name__)

MODE_IDLE = "idle"
MODE_LIVE = "live_running"
MODE_REPLAYING = "replaying"

REPLAY_ACTIONS = ("play", "pause", "seek", "speed")


# request bodies (module scope so FastAPI can resolve the string annotations
# produced by `from __future__ import annotations`)
class RecordBody(BaseModel):
    on: bool


class ReplayOpenBody(BaseModel):
    path: str | None = None


class ReplayControlBody(BaseModel):
    action: str
    value: float | None = None


class ServiceCore:
    """The whole control plane minus HTTP; direct calls make testing exact."""

    def __init__(self, cfg: SceneConfig, data_dir: str | Path, hub: TelemetryHub | None = None) -> None:
        self.cfg = cfg
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.hub = hub or TelemetryHub()
        self._lock = threading.RLock()
        self.mode = MODE_IDLE
        self._loop: LiveLoop | None = None
        self._replay: ReplaySession | None = None
        self._replay_path: Path | None = None
        self._replay_last_flag: bool | None = None
        self.last_session_path: Path | None = None

    # ------------------------------------------------------------------ state

    def state_dict(self) -> dict:
        with self._lock:
            loop = self._loop
            replay = self._replay
            state = {
                "mode": self.mode,
                "camera_on": bool(loop and loop.camera_on),
                "pose_on": bool(loop and loop.pose_on),
                "monitor_on": bool(loop and loop.monitor_on),
                "fsm_running": bool(loop and loop.fsm.state == FSM_RUNNING),
                "recording": bool(loop and loop.recording),
                "active_session_path": str(loop.recording_path) if loop and loop.recording else None,
                "replay": None,
            }
            if replay is not None:
                state["replay"] = {
                    "path": str(self._replay_path),
                    "duration_s": replay.duration_s,
                    "position_t": replay.logical_t,
                    "cursor": replay.cursor,
                    "speed": replay.speed,
                    "playing": replay.playing,
                }
            return state

    def _emit_state(self) -> None:
        self.hub.publish(StateChangedEvent(seq=self.hub.next_seq(), state=self.state_dict()))

    def _ack(self, noop: bool = False, **extra) -> dict:
        out = {"ok": True, "noop": noop, "state": self.state_dict()}
        out.update(extra)
        return out

    # ------------------------------------------------------------- run control

    def start_run(self) -> dict:
        with self._lock:
            if self.mode == MODE_REPLAYING:
                raise InvalidTransition("close the replay before starting the live run")
            if self.mode == MODE_LIVE:
                return self._ack(noop=True)
            self._loop = LiveLoop(self.cfg, camera_on=False, pose_on=False, monitor_on=False)
            self.mode = MODE_LIVE
            self._emit_state()
            return self._ack()

    def stop_run(self) -> dict:
        with self._lock:
            if self.mode != MODE_LIVE:
                return self._ack(noop=True)
            assert self._loop is not None
            finalized = self._loop.stop_recording()
            if finalized is not None:
                self.last_session_path = finalized[0]
            self._loop = None
            self.mode = MODE_IDLE
            self._emit_state()
            extra = {}
            if finalized is not None:
                extra = {"path": str(finalized[0]), "samples": finalized[1]}
            return self._ack(**extra)

    def start_fsm(self) -> dict:
        with self._lock:
            self._require_live("the task FSM")
            assert self._loop is not None
            if self._loop.fsm.state == FSM_RUNNING:
                return self._ack(noop=True)
            self._loop.fsm = self._loop.fsm.start()
            self._emit_state()
            return self._ack()

    def stop_fsm(self) -> dict:
        with self._lock:
            self._require_live("the task FSM")
            assert self._loop is not None
            if self._loop.fsm.state != FSM_RUNNING:
                return self._ack(noop=True)
            self._loop.fsm = self._loop.fsm.stop()
            self._emit_state()
            return self._ack()

    def _require_live(self, what: str) -> None:
        if self.mode != MODE_LIVE:
            raise InvalidTransition(f"{what} requires the live run (mode is {self.mode})")

    # --------------------------------------------------------- pipeline stages

    def start_camera(self) -> dict:
        with self._lock:
            if self.mode != MODE_LIVE:
                raise DependencyNotRunning("the camera needs the live run started first")
            assert self._loop is not None
            if self._loop.camera_on:
                return self._ack(noop=True)
            self._loop.camera_on = True
            self._emit_state()
            return self._ack()

    def start_pose_estimate(self) -> dict:
        with self._lock:
            if self.mode != MODE_LIVE or not (self._loop and self._loop.camera_on):
                raise DependencyNotRunning("pose estimation needs the camera started first")
            if self._loop.pose_on:
                return self._ack(noop=True)
            self._loop.pose_on = True
            self._emit_state()
            return self._ack()

    def start_safety_monitoring(self) -> dict:
        with self._lock:
            if self.mode != MODE_LIVE or not (self._loop and self._loop.pose_on):
                raise DependencyNotRunning("safety monitoring needs pose estimation started first")
            if self._loop.monitor_on:
                return self._ack(noop=True)
            self._loop.monitor_on = True
            self._emit_state()
            return self._ack()

    # ---------------------------------------------------------------- recording

    def set_recording(self, on: bool) -> dict:
        with self._lock:
            if self.mode != MODE_LIVE:
                raise InvalidTransition(f"recording requires the live run (mode is {self.mode})")
            assert self._loop is not None
            if bool(on) == self._loop.recording:
                return self._ack(noop=True)
            if on:
                created = time.time()
                path = self.data_dir / session_filename(created)
                bump = 1
                while path.exists():
                    bump += 1
                    path = self.data_dir / f"session-{int(created)}-{bump}.yaml"
                self._loop.start_recording(path, created_unix=created)
                self._emit_state()
                return self._ack(path=str(path))
            finalized = self._loop.stop_recording()
            assert finalized is not None
            self.last_session_path = finalized[0]
            self._emit_state()
            return self._ack(path=str(finalized[0]), samples=finalized[1])

    # ------------------------------------------------------------------- replay

    def _latest_session(self) -> Path:
        if self.last_session_path is not None and self.last_session_path.exists():
            return self.last_session_path
        candidates = sorted(self.data_dir.glob("session-*.yaml"), key=lambda p: p.stat().st_mtime)
        if not candidates:
            raise NotFound(f"no recorded sessions in {self.data_dir}")
        return candidates[-1]

    def replay_open(self, path: str | Path | None = None) -> dict:
        with self._lock:
            if self.mode == MODE_LIVE:
                raise InvalidTransition("stop the live run before opening a replay")
            target = Path(path) if path is not None else self._latest_session()
            if not target.exists():
                raise NotFound(f"session file {target} does not exist")
            rec = load(target)  # RecordingError propagates typed
            session = ReplaySession(rec)
            frame = session.seek(0.0)
            self._replay = session
            self._replay_path = target
            self._replay_last_flag = None
            self.mode = MODE_REPLAYING
            self._emit_state()
            self._emit_replay_frame(frame)
            return self._ack(
                path=str(target),
                duration_s=session.duration_s,
                samples=len(rec.samples),
            )

    def replay_control(self, action: str, value: float | None = None) -> dict:
        with self._lock:
            if self.mode != MODE_REPLAYING or self._replay is None:
                raise InvalidTransition(f"no replay open (mode is {self.mode})")
            session = self._replay
            if action == "play":
                if session.playing:
                    return self._ack(noop=True)
                if session.exhausted and session.logical_t >= session.duration_s:
                    # replaying past the end restarts from the top
                    frame = session.seek(0.0)
                    self._emit_replay_frame(frame)
                session.play()
                self._emit_state()
                return self._ack()
            if action == "pause":
                if not session.playing:
                    return self._ack(noop=True)
                session.pause()
                self._emit_state()
                return self._ack()
            if action == "seek":
                if value is None:
                    raise BadRequest("seek needs a value (seconds)")
                frame = session.seek(float(value))
                self._replay_last_flag = None  # recomputation restarted; no edge across a seek
                self._emit_state()
                self._emit_replay_frame(frame)
                return self._ack(cursor=session.cursor, position_t=session.logical_t)
            if action == "speed":
                if value is None or not value > 0:
                    raise BadRequest(f"speed needs a positive value, got {value!r}")
                session.set_speed(float(value))
                self._emit_state()
                return self._ack(speed=session.speed)
            raise BadRequest(f"unknown replay action {action!r}; expected one of {REPLAY_ACTIONS}")

    def replay_close(self) -> dict:
        with self._lock:
            if self.mode != MODE_REPLAYING:
                return self._ack(noop=True)
            self._replay = None
            self._replay_path = None
            self._replay_last_flag = None
            self.mode = MODE_IDLE
            self._emit_state()
            return self._ack()

    # ------------------------------------------------------------------ queries

    def get_state(self) -> dict:
        return self.state_dict()

    def scene_dict(self) -> dict:
        """Read-only scene geometry for visualization clients."""
        from . import serialization as ser

        return {
            "zone": ser.zone_to_dict(self.cfg.zone),
            "table": ser.table_to_dict(self.cfg.table),
            "camera": ser.camera_to_dict(self.cfg.camera),
            "rate_hz": self.cfg.rate_hz,
            "chain_dof": self.cfg.chain.dof,
        }

    def list_sessions(self) -> list[dict]:
        """Recorded sessions, newest first, with durations and safety periods."""
        out = []
        for path in sorted(self.data_dir.glob("session-*.yaml")):
            entry: dict = {"path": str(path), "name": path.name}
            try:
                rec = load(path)
                periods = monitor_for(rec).segment_periods(rec.samples)
                entry.update(
                    created_unix=rec.meta.created_unix,
                    duration_s=rec.duration_s,
                    samples=len(rec.samples),
                    period_count=len(periods),
                    periods=[[p.t_enter, p.t_exit] for p in periods],
                )
            except RecordingError as e:
                entry["error"] = f"{type(e).__name__}: {e}"
            out.append(entry)
        out.sort(key=lambda e: e.get("created_unix", 0.0), reverse=True)
        return out

    # ------------------------------------------------------------------ drivers

    def tick_live(self) -> LiveTick | None:
        """One live frame; telemetry order is flag edge, period, then frame."""
        with self._lock:
            if self.mode != MODE_LIVE or self._loop is None:
                return None
            tick = self._loop.step()
            if tick.flag_event is not None:
                self.hub.publish(
                    FlagChangedEvent(
                        seq=self.hub.next_seq(),
                        t=tick.flag_event.t,
                        flag=tick.flag_event.flag,
                        failsafe=tick.flag_event.failsafe,
                        origin="live",
                    )
                )
            if tick.period is not None:
                self.hub.publish(PeriodClosedEvent(seq=self.hub.next_seq(), period=tick.period))
            self.hub.publish(
                FrameEvent(
                    seq=self.hub.next_seq(),
                    origin="live",
                    frame=tick.frame,
                    sample=sample_to_dict(tick.sample),
                )
            )
            return tick

    def tick_replay(self, wall_dt: float) -> list[SceneFrame]:
        """Advance replay by wall_dt of real time; emits due frames in order."""
        with self._lock:
            if self.mode != MODE_REPLAYING or self._replay is None:
                return []
            session = self._replay
            was_playing = session.playing
            frames = session.tick(wall_dt)
            for frame in frames:
                self._emit_replay_frame(frame)
            if was_playing and not session.playing:
                self._emit_state()  # reached the end
            return frames

    def _emit_replay_frame(self, frame: SceneFrame) -> None:
        """Frame event, preceded by a FlagChanged event on recomputed-flag edges."""
        flag = frame.recomputed_flag
        if flag is not None and self._replay_last_flag is not None and flag != self._replay_last_flag:
            self.hub.publish(
                FlagChangedEvent(seq=self.hub.next_seq(), t=frame.t, flag=flag, origin="replay")
            )
        self._replay_last_flag = flag
        sample = None
        if self._replay is not None:
            i = self._replay.sample_index_at(frame.t)
            if i is not None:
                sample = sample_to_dict(self._replay.recording.samples[i])
        self.hub.publish(
            FrameEvent(seq=self.hub.next_seq(), origin="replay", frame=frame, sample=sample)
        )

    def warn(self, message: str) -> None:
        self.hub.publish(WarningEvent(seq=self.hub.next_seq(), message=message))


class RealtimeDriver(threading.Thread):
    """Paces the core at rate_hz on the real clock; detects stalled ticks."""

    def __init__(self, core: ServiceCore) -> None:
        super().__init__(name="safescene-driver", daemon=True)
        self.core = core
        self.period = 1.0 / core.cfg.rate_hz
        self._stop_event = threading.Event()  # Thread reserves the name _stop
        self._last_stall_warn = 0.0

    def stop(self) -> None:
        self._stop_event.set()

    def run(self) -> None:
        deadline = time.monotonic()
        last = deadline
        while not self._stop_event.is_set():
            now = time.monotonic()
            if self.core.mode == MODE_LIVE:
                self.core.tick_live()
            elif self.core.mode == MODE_REPLAYING:
                self.core.tick_replay(now - last)
            last = now
            deadline += self.period
            behind = time.monotonic() - deadline
            if behind > self.period:
                # skip missed deadlines instead of bursting to catch up
                deadline = time.monotonic()
                if now - self._last_stall_warn > 1.0:
                    self._last_stall_warn = now
                    self.core.warn(f"clock stall: tick ran {behind * 1000:.1f} ms past its deadline")
            else:
                self._stop_event.wait(max(0.0, deadline - time.monotonic()))


def build_app(core: ServiceCore, ui_dir: str | Path | None = None):
    """FastAPI wiring around a ServiceCore."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse, StreamingResponse

    app = FastAPI(title="safescene", version="0.1.0")
    app.state.core = core

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.kind, "detail": str(exc)})

    @app.exception_handler(RecordingError)
    async def _recording_error(request: Request, exc: RecordingError):
        return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.post("/api/run/start")
    def run_start():
        return core.start_run()

    @app.post("/api/run/stop")
    def run_stop():
        return core.stop_run()

    @app.post("/api/fsm/start")
    def fsm_start():
        return core.start_fsm()

    @app.post("/api/fsm/stop")
    def fsm_stop():
        return core.stop_fsm()

    @app.post("/api/camera/start")
    def camera_start():
        return core.start_camera()

    @app.post("/api/pose/start")
    def pose_start():
        return core.start_pose_estimate()

    @app.post("/api/monitor/start")
    def monitor_start():
        return core.start_safety_monitoring()

    @app.post("/api/record")
    def record(body: RecordBody):
        return core.set_recording(body.on)

    @app.post("/api/replay/open")
    def replay_open(body: ReplayOpenBody | None = None):
        return core.replay_open(body.path if body else None)

    @app.post("/api/replay/control")
    def replay_control(body: ReplayControlBody):
        return core.replay_control(body.action, body.value)

    @app.post("/api/replay/close")
    def replay_close():
        return core.replay_close()

    @app.get("/api/state")
    def get_state():
        return core.get_state()

    @app.get("/api/scene")
    def scene():
        return core.scene_dict()

    @app.get("/api/sessions")
    def sessions():
        return core.list_sessions()

    @app.get("/api/telemetry")
    def telemetry():
        from .telemetry import StateChangedEvent, event_to_dict

        def stream():
            sub = core.hub.subscribe(maxlen=512)
            try:
                snapshot = StateChangedEvent(seq=core.hub.next_seq(), state=core.state_dict())
                yield json.dumps(event_to_dict(snapshot)) + "\n"
                while True:
                    ev = sub.get(timeout=10.0)
                    if ev is None:
                        yield json.dumps({"type": "heartbeat"}) + "\n"
                        continue
                    yield json.dumps(event_to_dict(ev)) + "\n"
            finally:
                core.hub.unsubscribe(sub)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="console")

    return app
