"""Safety-zone intrusion tracking.

The rules, chosen safety-first:

  * the flag rises on the very first frame the wrist resolves inside the
    zone (no entry debounce),
  * it falls only after `exit_debounce_frames` consecutive confident
    outside resolutions, and the closed period's exit time is the first
    frame of that outside streak,
  * the zone is a closed box: boundary contact counts as inside,
  * observations that are absent, below `confidence_min`, or that fail to
    back-project count as missing; after `missing_failsafe_frames`
    consecutive missing frames the flag is forced on until a confident
    outside streak clears it.

step() is a pure transition on an immutable MonitorState, so identical
frame sequences always produce identical flag sequences. One stepping
context owns a state value at a time; share frames, not state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

from .errors import InsufficientHistory, NonMonotonicTimestamp, SafeSceneError
from .geometry import (
    BasePoint,
    CameraIntrinsics,
    PixelPoint,
    RigidTransform,
    TablePlane,
    back_project_depth,
    back_project_plane,
)

PROJECTION_MODES = ("depth", "plane")


@dataclass(frozen=True)
class SafetyZone:
    """Closed axis-aligned box in the base frame: the shared workspace."""

    min_corner: BasePoint
    max_corner: BasePoint

    def __post_init__(self) -> None:
        lo, hi = self.min_corner, self.max_corner
        if not (lo.x < hi.x and lo.y < hi.y and lo.z < hi.z):
            raise ValueError(f"zone corners must satisfy min < max componentwise: {lo} vs {hi}")


def contains(zone: SafetyZone, p: BasePoint) -> bool:
    """Closed-set membership: points exactly on a face count as inside."""
    lo, hi = zone.min_corner, zone.max_corner
    return (
        lo.x <= p.x <= hi.x
        and lo.y <= p.y <= hi.y
        and lo.z <= p.z <= hi.z
    )


@dataclass(frozen=True)
class WristObservation:
    """One camera-pipeline output: a pixel detection with optional depth."""

    t: float
    px: PixelPoint | None
    depth: float | None
    confidence: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"timestamp must be finite and >= 0, got {self.t!r}")
        if self.px is None and self.depth is not None:
            raise ValueError("depth without a pixel detection is meaningless")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class MonitorConfig:
    """Tuning knobs; defaults are the shipped behavior."""

    exit_debounce_frames: int = 3
    missing_failsafe_frames: int = 10
    confidence_min: float = 0.3
    projection_mode: str = "depth"

    def __post_init__(self) -> None:
        if self.exit_debounce_frames < 1:
            raise ValueError("exit_debounce_frames must be >= 1")
        if self.missing_failsafe_frames < 1:
            raise ValueError("missing_failsafe_frames must be >= 1")
        if not (0.0 <= self.confidence_min <= 1.0):
            raise ValueError("confidence_min must be in [0, 1]")
        if self.projection_mode not in PROJECTION_MODES:
            raise ValueError(f"projection_mode must be one of {PROJECTION_MODES}")


@dataclass(frozen=True)
class MonitorState:
    """Fold state of the intrusion tracker.

    outside_since and last_t are bookkeeping: the exit timestamp of a
    closed period is the first frame of the clearing streak, and step()
    rejects non-monotonic input.
    """

    flag: bool = False
    consecutive_outside: int = 0
    consecutive_missing: int = 0
    last_point: BasePoint | None = None
    open_period_start: float | None = None
    outside_since: float | None = None
    last_t: float | None = None


@dataclass(frozen=True)
class SafetyPeriod:
    """One closed safety-critical interval."""

    t_enter: float
    t_exit: float

    def __post_init__(self) -> None:
        if not self.t_enter < self.t_exit:
            raise ValueError(f"period must have t_enter < t_exit, got {self.t_enter} >= {self.t_exit}")


@dataclass(frozen=True)
class FlagEvent:
    """Edge of the safety flag; failsafe marks a rise forced by data loss."""

    t: float
    flag: bool
    failsafe: bool = False


class SafetyMonitor:
    """Binds the zone and projection context; transitions stay pure."""

    def __init__(
        self,
        zone: SafetyZone,
        camera: CameraIntrinsics,
        extrinsic: RigidTransform,
        table: TablePlane,
        config: MonitorConfig = MonitorConfig(),
    ) -> None:
        self.zone = zone
        self.camera = camera
        self.extrinsic = extrinsic
        self.table = table
        self.config = config

    def resolve(self, obs: WristObservation) -> BasePoint | None:
        """Back-project an observation, or None when it counts as missing."""
        if obs.px is None or obs.confidence < self.config.confidence_min:
            return None
        try:
            if self.config.projection_mode == "depth":
                if obs.depth is None:
                    return None
                return back_project_depth(obs.px, obs.depth, self.camera, self.extrinsic)
            return back_project_plane(obs.px, self.table, self.camera, self.extrinsic)
        except SafeSceneError:
            # unprojectable detections are treated as tracking loss
            return None

    def step(
        self, state: MonitorState, obs: WristObservation
    ) -> tuple[MonitorState, SafetyPeriod | None, FlagEvent | None]:
        """Advance by one frame; returns (state', closed period, flag edge)."""
        if state.last_t is not None and obs.t <= state.last_t:
            raise NonMonotonicTimestamp(f"observation at t={obs.t} after t={state.last_t}")
        cfg = self.config
        point = self.resolve(obs)

        if point is None:
            missing = state.consecutive_missing + 1
            event = None
            new = replace(
                state,
                consecutive_outside=0,
                consecutive_missing=missing,
                outside_since=None,
                last_t=obs.t,
            )
            if not state.flag and missing >= cfg.missing_failsafe_frames:
                event = FlagEvent(obs.t, True, failsafe=True)
                new = replace(new, flag=True, open_period_start=obs.t)
            return new, None, event

        if contains(self.zone, point):
            event = None if state.flag else FlagEvent(obs.t, True)
            new = replace(
                state,
                flag=True,
                consecutive_outside=0,
                consecutive_missing=0,
                last_point=point,
                open_period_start=state.open_period_start if state.flag else obs.t,
                outside_since=None,
                last_t=obs.t,
            )
            return new, None, event

        # confident outside resolution
        streak = state.consecutive_outside + 1
        since = state.outside_since if state.consecutive_outside > 0 else obs.t
        assert since is not None
        if state.flag and streak >= cfg.exit_debounce_frames:
            period = SafetyPeriod(state.open_period_start, since)  # type: ignore[arg-type]
            new = replace(
                state,
                flag=False,
                consecutive_outside=0,
                consecutive_missing=0,
                last_point=point,
                open_period_start=None,
                outside_since=None,
                last_t=obs.t,
            )
            return new, period, FlagEvent(obs.t, False)
        new = replace(
            state,
            consecutive_outside=streak,
            consecutive_missing=0,
            last_point=point,
            outside_since=since,
            last_t=obs.t,
        )
        return new, None, None

    def segment_periods(self, samples: Iterable) -> list["SafetyPeriod"]:
        """Fold step() over recorded samples; truncate an open trailing period.

        Accepts WristObservation values or recorded frame samples (anything
        with t/wrist_px/wrist_depth_m/wrist_conf fields).
        """
        state = MonitorState()
        periods: list[SafetyPeriod] = []
        for obs in _as_observations(samples):
            state, period, _ = self.step(state, obs)
            if period is not None:
                periods.append(period)
        if state.flag and state.last_t is not None:
            start = state.open_period_start
            assert start is not None
            if start < state.last_t:
                periods.append(SafetyPeriod(start, state.last_t))
        return periods


def _as_observations(samples: Iterable) -> Iterator[WristObservation]:
    for s in samples:
        if isinstance(s, WristObservation):
            yield s
        else:
            px = s.wrist_px
            yield WristObservation(
                t=s.t,
                px=None if px is None else PixelPoint(px[0], px[1]),
                depth=s.wrist_depth_m,
                confidence=s.wrist_conf,
            )


class WristTrack:
    """Ring of the most recent resolved wrist points, for extrapolation."""

    def __init__(self, capacity: int = 32) -> None:
        if capacity < 2:
            raise ValueError("track capacity must be >= 2")
        self._points: deque[tuple[float, BasePoint]] = deque(maxlen=capacity)

    def push(self, t: float, p: BasePoint) -> None:
        if self._points and t <= self._points[-1][0]:
            raise NonMonotonicTimestamp(f"track point at t={t} after t={self._points[-1][0]}")
        self._points.append((t, p))

    def __len__(self) -> int:
        return len(self._points)

    def latest(self) -> tuple[float, BasePoint]:
        return self._points[-1]

    def recent(self, n: int = 2) -> list[tuple[float, BasePoint]]:
        return list(self._points)[-n:]


def predict(track: WristTrack, horizon: float) -> BasePoint:
    """Constant-velocity extrapolation from the last two track points."""
    if len(track) < 2:
        raise InsufficientHistory(f"need 2 track points, have {len(track)}")
    (t0, p0), (t1, p1) = track.recent(2)
    dt = t1 - t0
    v = (p1.as_array() - p0.as_array()) / dt
    return BasePoint.from_array(p1.as_array() + v * horizon)
