"""Deterministic synthetic scene: the scripted robot task FSM and scripted
wrist observations, composed into the live 20 Hz frame stream.

The loop is clock-free: step() produces exactly one frame and stamps it
t = k / rate_hz. Pacing (real time or simulated) belongs to whoever calls
step(), which is what makes every test of this module deterministic.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .config import SceneConfig, TaskPlan, WristScript
from .errors import PointBehindCamera
from .geometry import PixelPoint, camera_depth, project
from .kinematics import JointState, forward_kinematics
from .monitor import (
    FlagEvent,
    MonitorState,
    SafetyMonitor,
    SafetyPeriod,
    WristObservation,
)
from .recording import FrameSample, SessionWriter
from .replay import SceneFrame

logger = logging.getLogger(__name__)

FSM_IDLE = "idle"
FSM_RUNNING = "running"
FSM_STOPPED = "stopped"


@dataclass(frozen=True)
class TaskFsm:
    """Waypoint-cycling task state; stepping is pure."""

    plan: TaskPlan
    state: str = FSM_IDLE
    segment: int = 0
    progress_s: float = 0.0

    def start(self) -> "TaskFsm":
        """Begin (or resume) cycling; resuming keeps the held position."""
        return replace(self, state=FSM_RUNNING)

    def stop(self) -> "TaskFsm":
        """Freeze at the current interpolated position."""
        return replace(self, state=FSM_STOPPED)

    def joint_state(self) -> JointState:
        plan = self.plan
        if self.state == FSM_IDLE:
            return JointState(plan.waypoints[0].joints_rad)
        a = np.asarray(plan.waypoints[self.segment].joints_rad)
        b = np.asarray(plan.waypoints[(self.segment + 1) % len(plan.waypoints)].joints_rad)
        frac = self.progress_s / plan.durations_s[self.segment]
        return JointState(tuple(a * (1 - frac) + b * frac))


def fsm_step(fsm: TaskFsm, dt: float) -> tuple[TaskFsm, JointState]:
    """Advance the task by dt seconds of linear joint-space interpolation.

    Idle and Stopped hold their position; a completed segment rolls into
    the next one, wrapping from the last waypoint back to the first.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt!r}")
    if fsm.state != FSM_RUNNING or dt == 0:
        return fsm, fsm.joint_state()
    plan = fsm.plan
    segment = fsm.segment
    progress = fsm.progress_s + dt
    while progress >= plan.durations_s[segment]:
        progress -= plan.durations_s[segment]
        segment = (segment + 1) % len(plan.waypoints)
    fsm = replace(fsm, segment=segment, progress_s=progress)
    return fsm, fsm.joint_state()


def wrist_observe(
    script: WristScript, t: float, cfg: SceneConfig, rng: np.random.Generator
) -> WristObservation:
    """Synthesize one wrist detection at time t.

    The scripted point is projected through the scene camera; Gaussian
    pixel/depth noise and Bernoulli dropout stand in for a real pose
    estimator. Points behind the camera come back as missing detections.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    dropped = cfg.noise.dropout_prob > 0 and rng.random() < cfg.noise.dropout_prob
    point = script.position_at(t)
    try:
        px = project(point, cfg.camera, cfg.extrinsic)
    except PointBehindCamera:
        return WristObservation(t=t, px=None, depth=None, confidence=0.0)
    if dropped:
        return WristObservation(t=t, px=None, depth=None, confidence=0.0)
    u, v = px.u, px.v
    if cfg.noise.px_sigma > 0:
        u += rng.normal(0.0, cfg.noise.px_sigma)
        v += rng.normal(0.0, cfg.noise.px_sigma)
    depth = camera_depth(point, cfg.extrinsic)
    if cfg.noise.depth_sigma > 0:
        depth += rng.normal(0.0, cfg.noise.depth_sigma)
    if depth <= 0:
        return WristObservation(t=t, px=None, depth=None, confidence=0.0)
    return WristObservation(
        t=t,
        px=PixelPoint(u, v),
        depth=depth,
        confidence=float(rng.uniform(0.7, 1.0)),
    )


@dataclass(frozen=True)
class LiveTick:
    """Everything one live frame produced."""

    index: int
    t: float
    sample: FrameSample
    frame: SceneFrame
    flag_event: FlagEvent | None
    period: SafetyPeriod | None
    recorded_sample: FrameSample | None


class LiveLoop:
    """Owns the per-tick state of the simulated cell.

    One context steps the loop; commands (stage toggles, record on/off)
    are plain method calls made between steps. Sinks receive immutable
    values and a failing sink is logged and skipped, never fatal.
    """

    def __init__(
        self,
        cfg: SceneConfig,
        *,
        camera_on: bool = True,
        pose_on: bool = True,
        monitor_on: bool = True,
        tick_sinks: Iterable[Callable[[LiveTick], None]] = (),
    ) -> None:
        self.cfg = cfg
        self.camera_on = camera_on
        self.pose_on = pose_on
        self.monitor_on = monitor_on
        self.fsm = TaskFsm(cfg.task)
        self.monitor = SafetyMonitor(cfg.zone, cfg.camera, cfg.extrinsic, cfg.table, cfg.monitor)
        self.monitor_state = MonitorState()
        self.rng = np.random.default_rng(cfg.rng_seed)
        self.tick_sinks = list(tick_sinks)
        self.k = 0
        self._writer: SessionWriter | None = None
        self._record_base_t = 0.0

    @property
    def t_next(self) -> float:
        return self.k / self.cfg.rate_hz

    @property
    def recording(self) -> bool:
        return self._writer is not None

    @property
    def recording_path(self) -> Path | None:
        return self._writer.path if self._writer else None

    def start_recording(self, path: str | Path, created_unix: float | None = None) -> Path:
        """Open a session file; the next frame becomes its t=0 sample."""
        if self._writer is not None:
            return self._writer.path
        created = time.time() if created_unix is None else created_unix
        self._writer = SessionWriter(path, self.cfg.session_meta(created))
        self._record_base_t = self.t_next
        return self._writer.path

    def stop_recording(self) -> tuple[Path, int] | None:
        """Finalize the open session file; returns (path, sample count)."""
        if self._writer is None:
            return None
        writer = self._writer
        self._writer = None
        path = writer.finalize()
        return path, writer.sample_count

    def step(self) -> LiveTick:
        """Produce one frame: task step, wrist synthesis, monitor fold, fan-out."""
        t = self.t_next
        self.fsm, joints = fsm_step(self.fsm, 1.0 / self.cfg.rate_hz if self.k > 0 else 0.0)

        if self.camera_on and self.pose_on:
            obs = wrist_observe(self.cfg.wrist, t, self.cfg, self.rng)
        else:
            obs = WristObservation(t=t, px=None, depth=None, confidence=0.0)

        period = None
        flag_event = None
        wrist_base = self.monitor.resolve(obs)
        if self.monitor_on:
            self.monitor_state, period, flag_event = self.monitor.step(self.monitor_state, obs)
            flag: bool | None = self.monitor_state.flag
        else:
            flag = None

        sample = FrameSample(
            t=t,
            joints_rad=joints.angles,
            wrist_px=None if obs.px is None else (obs.px.u, obs.px.v),
            wrist_depth_m=obs.depth,
            wrist_conf=obs.confidence,
            safety_flag=bool(flag),
        )
        recorded = None
        if self._writer is not None:
            recorded = FrameSample(
                t=t - self._record_base_t,
                joints_rad=sample.joints_rad,
                wrist_px=sample.wrist_px,
                wrist_depth_m=sample.wrist_depth_m,
                wrist_conf=sample.wrist_conf,
                safety_flag=sample.safety_flag,
            )
            self._writer.append(recorded)

        frame = SceneFrame(
            t=t,
            link_poses=tuple(forward_kinematics(self.cfg.chain, joints)),
            wrist_base=wrist_base,
            recorded_flag=flag,
            recomputed_flag=flag,
        )
        tick = LiveTick(
            index=self.k,
            t=t,
            sample=sample,
            frame=frame,
            flag_event=flag_event,
            period=period,
            recorded_sample=recorded,
        )
        self.k += 1
        for sink in self.tick_sinks:
            try:
                sink(tick)
            except Exception:
                logger.exception("tick sink %r failed; continuing", sink)
        return tick


def run_live(
    cfg: SceneConfig,
    duration_s: float,
    *,
    record_path: str | Path | None = None,
    tick_sinks: Iterable[Callable[[LiveTick], None]] = (),
    created_unix: float | None = None,
) -> dict:
    """Headless run under a simulated clock: exactly round(duration * rate) frames.

    Used for golden-file generation and batch experiments; returns a small
    summary (frame count, recording path, safety periods seen). The task
    FSM runs for the whole duration.
    """
    loop = LiveLoop(cfg, tick_sinks=tick_sinks)
    loop.fsm = loop.fsm.start()
    if record_path is not None:
        loop.start_recording(record_path, created_unix=created_unix)
    n = round(duration_s * cfg.rate_hz)
    periods: list[SafetyPeriod] = []
    for _ in range(n):
        tick = loop.step()
        if tick.period is not None:
            periods.append(tick.period)
    finalized = loop.stop_recording()
    return {
        "frames": n,
        "path": finalized[0] if finalized else None,
        "periods": periods,
    }
