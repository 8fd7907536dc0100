"""Replay of recorded sessions: joint poses, wrist back-projection, and the
integrated scene stream with seek and playback-speed control.

Flags are both replayed from the file and recomputed by running the same
monitor rules over the samples; every frame reports whether the two agree.
Seeking is O(1): recomputation restarts from a fresh monitor state at the
seek target, and frames are marked warming-up for the first
exit_debounce_frames frames, where the recomputed flag is best-effort.

Pacing is driven entirely by the wall_dt passed to tick(), never by an
internal timer, so playback is deterministic under a simulated clock.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .errors import IndexOutOfRange, NonSequentialReplay, ValidationError
from .geometry import BasePoint, RigidTransform

# grace when comparing the accumulated logical clock against sample times;
# absorbs float rounding without ever approaching a real frame period
_DUE_EPS = 1e-9
from .kinematics import clamp_to_limits, forward_kinematics
from .monitor import MonitorState, PixelPoint, SafetyMonitor, SafetyPeriod, WristObservation
from .recording import SessionRecording


@dataclass(frozen=True)
class SceneFrame:
    """One replayed (or live) scene tick, ready to draw."""

    t: float
    link_poses: tuple[RigidTransform, ...]
    wrist_base: BasePoint | None
    recorded_flag: bool | None
    recomputed_flag: bool | None
    warmup: bool = False

    @property
    def consistency(self) -> bool | None:
        """Recorded and recomputed flags agree; None when either is absent."""
        if self.recorded_flag is None or self.recomputed_flag is None:
            return None
        return self.recorded_flag == self.recomputed_flag


def monitor_for(rec: SessionRecording) -> SafetyMonitor:
    """The monitor the session's own metadata describes."""
    m = rec.meta
    return SafetyMonitor(m.zone, m.camera, m.extrinsic, m.table, m.monitor)


def _check_index(rec: SessionRecording, i: int) -> None:
    if not (0 <= i < len(rec.samples)):
        raise IndexOutOfRange(f"sample index {i} outside 0..{len(rec.samples) - 1}")


def observation_at(rec: SessionRecording, i: int) -> WristObservation:
    _check_index(rec, i)
    s = rec.samples[i]
    return WristObservation(
        t=s.t,
        px=None if s.wrist_px is None else PixelPoint(*s.wrist_px),
        depth=s.wrist_depth_m,
        confidence=s.wrist_conf,
    )


def joint_frame(rec: SessionRecording, i: int) -> list[RigidTransform]:
    """Link poses for sample i; out-of-limit recordings are clamped, not fatal."""
    _check_index(rec, i)
    angles = clamp_to_limits(rec.meta.chain, rec.samples[i].joints_rad)
    return forward_kinematics(rec.meta.chain, angles)


def hand_frame(rec: SessionRecording, i: int) -> BasePoint | None:
    """Back-projected wrist for sample i, or None when the frame has no usable detection."""
    _check_index(rec, i)
    return monitor_for(rec).resolve(observation_at(rec, i))


@dataclass(frozen=True)
class ReplayFlagState:
    """Recomputation cursor: monitor fold state plus the only index it may consume next."""

    monitor_state: MonitorState
    next_index: int = 0
    warmup_left: int = 0


def initial_flag_state() -> ReplayFlagState:
    return ReplayFlagState(MonitorState())


def scene_frame(
    rec: SessionRecording, i: int, state: ReplayFlagState
) -> tuple[SceneFrame, ReplayFlagState]:
    """Joint + hand replay + flag recomputation for sample i.

    Frames must be consumed in order; jumping requires a seek (which builds
    a fresh state via ReplaySession or flag_state_at).
    """
    _check_index(rec, i)
    if i != state.next_index:
        raise NonSequentialReplay(
            f"frame {i} requested but recomputation expects {state.next_index}; seek first"
        )
    monitor = monitor_for(rec)
    obs = observation_at(rec, i)
    m_state, _, _ = monitor.step(state.monitor_state, obs)
    frame = SceneFrame(
        t=rec.samples[i].t,
        link_poses=tuple(joint_frame(rec, i)),
        wrist_base=monitor.resolve(obs),
        recorded_flag=rec.samples[i].safety_flag,
        recomputed_flag=m_state.flag,
        warmup=state.warmup_left > 0,
    )
    new = ReplayFlagState(
        monitor_state=m_state,
        next_index=i + 1,
        warmup_left=max(0, state.warmup_left - 1),
    )
    return frame, new


def flag_state_at(rec: SessionRecording, i: int) -> ReplayFlagState:
    """Fresh recomputation state targeting sample i.

    Starting anywhere but sample 0 loses the monitor history, so those
    states carry a warm-up budget of exit_debounce_frames frames.
    """
    _check_index(rec, i)
    warmup = 0 if i == 0 else rec.meta.monitor.exit_debounce_frames
    return ReplayFlagState(MonitorState(), next_index=i, warmup_left=warmup)


class ReplaySession:
    """Cursor over one recording; owned by a single driver context.

    Opening the session positions it at sample 0 and returns that frame
    from seek(0.0); each later seek returns the snapped frame. tick()
    then emits only samples strictly after the current position, paced by
    logical time: logical_t advances by wall_dt * speed and every sample
    whose timestamp it passes is emitted in order. Playback stops once
    logical time crosses the session duration (last timestamp plus one
    frame period).
    """

    def __init__(self, recording: SessionRecording) -> None:
        if not recording.samples:
            raise ValidationError("cannot replay an empty session")
        self.recording = recording
        self.speed = 1.0
        self.playing = False
        self.logical_t = 0.0
        self._times = [s.t for s in recording.samples]
        self._duration = recording.duration_s
        self._next = 0
        self._flag_state = initial_flag_state()

    @property
    def cursor(self) -> int:
        """Index of the sample at the current playback position."""
        return max(0, self._next - 1)

    def sample_index_at(self, t: float) -> int | None:
        """Index of the sample stamped exactly t, if any."""
        i = bisect.bisect_left(self._times, t)
        if 0 <= i < len(self._times) and self._times[i] == t:
            return i
        return None

    @property
    def duration_s(self) -> float:
        return self._duration

    @property
    def exhausted(self) -> bool:
        return self._next >= len(self._times)

    def play(self) -> None:
        self.playing = True

    def pause(self) -> None:
        self.playing = False

    def set_speed(self, speed: float) -> None:
        if not (speed > 0):
            raise ValueError(f"playback speed must be > 0, got {speed!r}")
        self.speed = float(speed)

    def seek(self, t: float) -> SceneFrame:
        """Jump to the last sample at or before t (clamped into the session).

        Returns the frame at the snap position; subsequent ticks emit only
        samples strictly after it.
        """
        t = max(0.0, float(t))
        snap = bisect.bisect_right(self._times, t) - 1
        if snap < 0:
            snap = 0
        state = flag_state_at(self.recording, snap)
        frame, state = scene_frame(self.recording, snap, state)
        self._flag_state = state
        self._next = snap + 1
        self.logical_t = self._times[snap]
        return frame

    def tick(self, wall_dt: float) -> list[SceneFrame]:
        """Advance logical time by wall_dt * speed and emit the frames due."""
        if not self.playing or wall_dt <= 0:
            return []
        self.logical_t += wall_dt * self.speed
        due = self.logical_t + _DUE_EPS
        out: list[SceneFrame] = []
        while self._next < len(self._times) and self._times[self._next] <= due:
            frame, self._flag_state = scene_frame(self.recording, self._next, self._flag_state)
            out.append(frame)
            self._next += 1
        if self.exhausted and due >= self._duration:
            self.playing = False
        return out

    def periods(self) -> list[SafetyPeriod]:
        """Safety periods recomputed over the whole recording."""
        return monitor_for(self.recording).segment_periods(self.recording.samples)
