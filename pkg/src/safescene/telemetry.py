"""Telemetry fan-out: one producer, any number of subscribers.

Each subscriber owns a bounded queue with drop-oldest overflow, so a slow
consumer can never stall the 20 Hz loop; it gets a Warning event counting
what it missed instead. Events are delivered to each subscriber in publish
order (seq is a hub-wide monotone counter).
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Union

from .monitor import SafetyPeriod
from .replay import SceneFrame
from .serialization import transform_to_dict


@dataclass(frozen=True)
class FrameEvent:
    seq: int
    origin: str  # "live" or "replay"
    frame: SceneFrame
    # raw recorded fields backing this frame, for inspection UIs
    sample: dict | None = None


@dataclass(frozen=True)
class FlagChangedEvent:
    seq: int
    t: float
    flag: bool
    failsafe: bool = False
    origin: str = "live"


@dataclass(frozen=True)
class PeriodClosedEvent:
    seq: int
    period: SafetyPeriod


@dataclass(frozen=True)
class StateChangedEvent:
    seq: int
    state: dict


@dataclass(frozen=True)
class WarningEvent:
    seq: int | None
    message: str


TelemetryEvent = Union[FrameEvent, FlagChangedEvent, PeriodClosedEvent, StateChangedEvent, WarningEvent]


def scene_frame_to_dict(frame: SceneFrame) -> dict:
    wrist = frame.wrist_base
    return {
        "t": frame.t,
        "link_poses": [transform_to_dict(p) for p in frame.link_poses],
        "wrist_base": None if wrist is None else [wrist.x, wrist.y, wrist.z],
        "recorded_flag": frame.recorded_flag,
        "recomputed_flag": frame.recomputed_flag,
        "consistency": frame.consistency,
        "warmup": frame.warmup,
    }


def sample_to_dict(sample) -> dict:
    """FrameSample as its on-disk field set."""
    return {
        "t": sample.t,
        "joints_rad": list(sample.joints_rad),
        "wrist_px": None if sample.wrist_px is None else list(sample.wrist_px),
        "wrist_depth_m": sample.wrist_depth_m,
        "wrist_conf": sample.wrist_conf,
        "safety_flag": sample.safety_flag,
    }


def event_to_dict(event: TelemetryEvent) -> dict:
    if isinstance(event, FrameEvent):
        return {"type": "frame", "seq": event.seq, "origin": event.origin,
                "frame": scene_frame_to_dict(event.frame), "sample": event.sample}
    if isinstance(event, FlagChangedEvent):
        return {"type": "flag_changed", "seq": event.seq, "t": event.t,
                "flag": event.flag, "failsafe": event.failsafe, "origin": event.origin}
    if isinstance(event, PeriodClosedEvent):
        return {"type": "period_closed", "seq": event.seq,
                "t_enter": event.period.t_enter, "t_exit": event.period.t_exit}
    if isinstance(event, StateChangedEvent):
        return {"type": "state_changed", "seq": event.seq, "state": event.state}
    if isinstance(event, WarningEvent):
        return {"type": "warning", "seq": event.seq, "message": event.message}
    raise TypeError(f"not a telemetry event: {event!r}")


class TelemetrySubscription:
    """One consumer's bounded view of the stream."""

    def __init__(self, maxlen: int) -> None:
        self._events: deque[TelemetryEvent] = deque(maxlen=maxlen)
        self._cond = threading.Condition()
        self._dropped = 0
        self._closed = False

    def _offer(self, event: TelemetryEvent) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._events) == self._events.maxlen:
                self._dropped += 1  # deque discards the oldest on append
            self._events.append(event)
            self._cond.notify()

    @property
    def dropped(self) -> int:
        return self._dropped

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def get(self, timeout: float | None = None) -> TelemetryEvent | None:
        """Next event, a synthesized drop Warning, or None on timeout/close."""
        with self._cond:
            if self._dropped:
                n, self._dropped = self._dropped, 0
                return WarningEvent(seq=None, message=f"subscriber too slow: dropped {n} events")
            while not self._events and not self._closed:
                if not self._cond.wait(timeout):
                    return None
            if self._events:
                return self._events.popleft()
            return None

    def drain(self) -> list[TelemetryEvent]:
        """Everything currently buffered (plus a drop Warning first if any)."""
        out: list[TelemetryEvent] = []
        with self._cond:
            if self._dropped:
                n, self._dropped = self._dropped, 0
                out.append(WarningEvent(seq=None, message=f"subscriber too slow: dropped {n} events"))
            out.extend(self._events)
            self._events.clear()
        return out

    def __iter__(self) -> Iterator[TelemetryEvent]:
        while True:
            ev = self.get(timeout=None)
            if ev is None:
                return
            yield ev


class TelemetryHub:
    """Publish side; never blocks on consumers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._subs: list[TelemetrySubscription] = []
        self._seq = 0

    def next_seq(self) -> int:
        with self._lock:
            self._seq += 1
            return self._seq

    def subscribe(self, maxlen: int = 256) -> TelemetrySubscription:
        sub = TelemetrySubscription(maxlen)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: TelemetrySubscription) -> None:
        sub.close()
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def publish(self, event: TelemetryEvent) -> None:
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            sub._offer(event)

    @property
    def subscriber_count(self) -> int:
        with self._lock:
            return len(self._subs)
