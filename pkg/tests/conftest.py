"""Shared fixtures and the independent reference oracles used across tests.

The oracles here deliberately re-derive behavior from first principles
(homogeneous 4x4 matrices, a literal transcription of the debounce rules)
so they share no code with the implementation they check.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from safescene.config import default_scene_config
from safescene.geometry import (
    BasePoint,
    CameraIntrinsics,
    PixelPoint,
    RigidTransform,
)
from safescene.monitor import (
    MonitorConfig,
    SafetyMonitor,
    SafetyZone,
    WristObservation,
)

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_PATH = DATA_DIR / "golden-10s.yaml"

# the golden session is the default scene simulated for 10 s with this stamp
GOLDEN_CREATED_UNIX = 1723180800.0
GOLDEN_DURATION_S = 10.0


@pytest.fixture
def cam() -> CameraIntrinsics:
    return CameraIntrinsics(fx=100.0, fy=100.0, cx=320.0, cy=240.0, width=640, height=480)


@pytest.fixture
def identity() -> RigidTransform:
    return RigidTransform.identity()


@pytest.fixture
def default_cfg():
    return default_scene_config()


@pytest.fixture
def golden_path() -> Path:
    assert GOLDEN_PATH.exists(), "golden session missing; see README for the regen command"
    return GOLDEN_PATH


# ---------------------------------------------------------------------------
# homogeneous-matrix oracle (geometry)


def homogeneous(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = rotation
    m[:3, 3] = translation
    return m


def apply_homogeneous(m: np.ndarray, p) -> np.ndarray:
    q = m @ np.array([p[0], p[1], p[2], 1.0])
    return q[:3]


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_transform(rng: np.random.Generator, t_scale: float = 2.0) -> RigidTransform:
    return RigidTransform(random_rotation(rng), rng.uniform(-t_scale, t_scale, size=3))


# ---------------------------------------------------------------------------
# debounce reference (monitor)

IN, OUT, MISS = "in", "out", "miss"


def reference_debounce(tokens, exit_debounce: int = 3, missing_failsafe: int = 10):
    """Literal transcription of the flag rules over (t, token) pairs.

    Returns (per-frame flags, closed periods). The trailing open period is
    NOT closed here; callers decide (mirrors step vs segment_periods).
    """
    flag = False
    enter_t = None
    outside_ts: list[float] = []
    missing_run = 0
    flags: list[bool] = []
    periods: list[tuple[float, float]] = []
    for t, tok in tokens:
        if tok == IN:
            missing_run = 0
            outside_ts = []
            if not flag:
                flag = True
                enter_t = t
        elif tok == OUT:
            missing_run = 0
            outside_ts.append(t)
            if flag and len(outside_ts) >= exit_debounce:
                flag = False
                periods.append((enter_t, outside_ts[0]))
                enter_t = None
                outside_ts = []
        elif tok == MISS:
            outside_ts = []
            missing_run += 1
            if not flag and missing_run >= missing_failsafe:
                flag = True
                enter_t = t
        else:
            raise ValueError(tok)
        flags.append(flag)
    return flags, periods, (enter_t if flag else None)


# a monitor whose geometry makes in/out/miss trivial to script:
# identity extrinsics, zone centered on the optical axis at depth 1.
TOKEN_ZONE = SafetyZone(BasePoint(-0.5, -0.5, 0.5), BasePoint(0.5, 0.5, 1.5))


def token_monitor(cam: CameraIntrinsics, config: MonitorConfig = MonitorConfig()) -> SafetyMonitor:
    from safescene.geometry import TablePlane

    return SafetyMonitor(TOKEN_ZONE, cam, RigidTransform.identity(), TablePlane(5.0), config)


def token_observation(tok: str, t: float, cam: CameraIntrinsics) -> WristObservation:
    if tok == IN:
        return WristObservation(t=t, px=PixelPoint(cam.cx, cam.cy), depth=1.0, confidence=0.9)
    if tok == OUT:
        return WristObservation(t=t, px=PixelPoint(cam.cx, cam.cy), depth=5.0, confidence=0.9)
    if tok == MISS:
        return WristObservation(t=t, px=None, depth=None, confidence=0.0)
    raise ValueError(tok)


def run_token_monitor(tokens, cam: CameraIntrinsics, config: MonitorConfig = MonitorConfig()):
    """Step the real monitor through a token script; returns flags/periods/events."""
    from safescene.monitor import MonitorState

    monitor = token_monitor(cam, config)
    state = MonitorState()
    flags, periods, events = [], [], []
    for t, tok in tokens:
        state, period, event = monitor.step(state, token_observation(tok, t, cam))
        flags.append(state.flag)
        if period is not None:
            periods.append((period.t_enter, period.t_exit))
        events.append(event)
    return flags, periods, events, state
