"""Control plane: state machine, stage gating, recording, replay control,
telemetry ordering and backpressure, and the HTTP wiring.

Most tests drive ServiceCore directly (the HTTP layer is a thin map); a
TestClient section checks status codes, JSON error bodies, and the NDJSON
telemetry stream.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import GOLDEN_PATH
from safescene.config import default_scene_config
from safescene.errors import (
    ApiError,
    BadRequest,
    DependencyNotRunning,
    InvalidTransition,
    NotFound,
    RecordingError,
)
from safescene.recording import load
from safescene.service import MODE_IDLE, MODE_LIVE, MODE_REPLAYING, ServiceCore
from safescene.telemetry import (
    FlagChangedEvent,
    FrameEvent,
    PeriodClosedEvent,
    StateChangedEvent,
    WarningEvent,
)


@pytest.fixture
def core(tmp_path) -> ServiceCore:
    return ServiceCore(default_scene_config(), tmp_path / "sessions")


def start_full_pipeline(core: ServiceCore) -> None:
    core.start_run()
    core.start_camera()
    core.start_pose_estimate()
    core.start_safety_monitoring()


class TestModeTransitions:
    def test_fresh_boot_is_idle_with_everything_off(self, core):
        s = core.get_state()
        assert s["mode"] == MODE_IDLE
        assert not s["camera_on"] and not s["pose_on"] and not s["monitor_on"]
        assert not s["recording"] and not s["fsm_running"]
        assert s["replay"] is None

    def test_start_running(self, core):
        r = core.start_run()
        assert r["ok"] and not r["noop"]
        assert core.mode == MODE_LIVE

    def test_start_running_twice_is_noop(self, core):
        core.start_run()
        r = core.start_run()
        assert r["ok"] and r["noop"]

    def test_fsm_while_replaying_is_invalid(self, core, tmp_path):
        core.replay_open(GOLDEN_PATH)
        with pytest.raises(InvalidTransition):
            core.start_fsm()

    def test_fsm_requires_live_run(self, core):
        with pytest.raises(InvalidTransition):
            core.start_fsm()

    def test_fsm_start_stop_cycle(self, core):
        core.start_run()
        assert not core.get_state()["fsm_running"]
        core.start_fsm()
        assert core.get_state()["fsm_running"]
        assert core.start_fsm()["noop"]
        core.stop_fsm()
        assert not core.get_state()["fsm_running"]
        assert core.stop_fsm()["noop"]

    def test_stop_run_returns_to_idle_and_is_idempotent(self, core):
        core.start_run()
        core.stop_run()
        assert core.mode == MODE_IDLE
        assert core.stop_run()["noop"]

    def test_run_start_while_replaying_is_invalid(self, core):
        core.replay_open(GOLDEN_PATH)
        with pytest.raises(InvalidTransition):
            core.start_run()

    def test_replay_while_live_is_invalid(self, core):
        core.start_run()
        with pytest.raises(InvalidTransition):
            core.replay_open(GOLDEN_PATH)


class TestStageDependencies:
    def test_camera_requires_run(self, core):
        with pytest.raises(DependencyNotRunning):
            core.start_camera()

    def test_pose_requires_camera(self, core):
        core.start_run()
        with pytest.raises(DependencyNotRunning):
            core.start_pose_estimate()

    def test_monitor_requires_pose(self, core):
        core.start_run()
        core.start_camera()
        with pytest.raises(DependencyNotRunning):
            core.start_safety_monitoring()

    def test_stage_idempotency(self, core):
        start_full_pipeline(core)
        assert core.start_camera()["noop"]
        assert core.start_pose_estimate()["noop"]
        assert core.start_safety_monitoring()["noop"]

    def test_wrist_without_flag_when_monitor_off(self, core):
        core.start_run()
        core.start_camera()
        core.start_pose_estimate()
        tick = core.tick_live()
        assert tick.sample.wrist_px is not None
        assert tick.frame.recorded_flag is None

    def test_full_pipeline_has_flags(self, core):
        start_full_pipeline(core)
        tick = core.tick_live()
        assert tick.frame.recorded_flag is not None

    def test_stages_reset_on_new_run(self, core):
        start_full_pipeline(core)
        core.stop_run()
        core.start_run()
        s = core.get_state()
        assert not s["camera_on"] and not s["pose_on"] and not s["monitor_on"]


class TestRecording:
    def test_requires_live_run(self, core):
        with pytest.raises(InvalidTransition):
            core.set_recording(True)

    def test_on_during_replay_is_invalid(self, core):
        core.replay_open(GOLDEN_PATH)
        with pytest.raises(InvalidTransition):
            core.set_recording(True)

    def test_off_when_off_is_noop(self, core):
        core.start_run()
        assert core.set_recording(False)["noop"]

    def test_five_second_window_records_100_samples(self, core):
        start_full_pipeline(core)
        for _ in range(10):
            core.tick_live()
        core.set_recording(True)
        for _ in range(100):
            core.tick_live()
        r = core.set_recording(False)
        assert abs(r["samples"] - 100) <= 1
        rec = load(r["path"])
        assert rec.samples[0].t == 0.0  # rebased
        assert len(rec.samples) == r["samples"]

    def test_stop_run_finalizes_open_recording(self, core):
        start_full_pipeline(core)
        core.set_recording(True)
        for _ in range(5):
            core.tick_live()
        r = core.stop_run()
        assert "path" in r
        assert len(load(r["path"]).samples) == 5

    def test_two_sessions_get_distinct_files(self, core):
        start_full_pipeline(core)
        core.set_recording(True)
        core.tick_live()
        p1 = core.set_recording(False)["path"]
        core.set_recording(True)
        core.tick_live()
        p2 = core.set_recording(False)["path"]
        assert p1 != p2


class TestReplay:
    def test_open_explicit_path(self, core):
        r = core.replay_open(GOLDEN_PATH)
        assert core.mode == MODE_REPLAYING
        assert r["samples"] == 200
        assert r["duration_s"] == pytest.approx(10.0)

    def test_open_defaults_to_most_recent_session(self, core):
        start_full_pipeline(core)
        core.set_recording(True)
        for _ in range(4):
            core.tick_live()
        first = core.set_recording(False)["path"]
        core.set_recording(True)
        for _ in range(6):
            core.tick_live()
        second = core.set_recording(False)["path"]
        core.stop_run()
        r = core.replay_open()
        assert r["path"] == str(second) != str(first)

    def test_open_with_no_sessions_is_not_found(self, core):
        with pytest.raises(NotFound):
            core.replay_open()

    def test_open_missing_file_is_not_found(self, core, tmp_path):
        with pytest.raises(NotFound):
            core.replay_open(tmp_path / "nope.yaml")

    def test_open_corrupt_file_is_typed(self, core, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("meta: [what\n")
        with pytest.raises(RecordingError):
            core.replay_open(bad)
        assert core.mode == MODE_IDLE

    def test_control_requires_open_replay(self, core):
        with pytest.raises(InvalidTransition):
            core.replay_control("play")

    def test_seek_emits_snap_frame(self, core):
        sub = core.hub.subscribe()
        core.replay_open(GOLDEN_PATH)
        core.replay_control("seek", 0.07)
        frames = [e for e in sub.drain() if isinstance(e, FrameEvent)]
        # open emits the t=0 frame, seek emits the snapped t=0.05 frame
        assert [f.frame.t for f in frames] == [0.0, 0.05]
        assert frames[-1].origin == "replay"

    def test_bad_speed_rejected(self, core):
        core.replay_open(GOLDEN_PATH)
        with pytest.raises(BadRequest):
            core.replay_control("speed", 0.0)
        with pytest.raises(BadRequest):
            core.replay_control("speed")

    def test_unknown_action_rejected(self, core):
        core.replay_open(GOLDEN_PATH)
        with pytest.raises(BadRequest):
            core.replay_control("rewind")

    def test_seek_requires_value(self, core):
        core.replay_open(GOLDEN_PATH)
        with pytest.raises(BadRequest):
            core.replay_control("seek")

    def test_double_speed_completes_in_half_wall_time(self, core):
        core.replay_open(GOLDEN_PATH)
        core.replay_control("speed", 2.0)
        core.replay_control("play")
        wall = 0.0
        emitted = 0
        while core.get_state()["replay"]["playing"]:
            wall += 0.05
            emitted += len(core.tick_replay(0.05))
            assert wall < 30.0
        assert abs(wall - 5.0) <= 0.05 + 1e-9
        assert emitted == 199  # everything after the open frame

    def test_play_after_end_restarts(self, core):
        core.replay_open(GOLDEN_PATH)
        core.replay_control("speed", 4.0)
        core.replay_control("play")
        while core.get_state()["replay"]["playing"]:
            core.tick_replay(0.25)
        r = core.replay_control("play")
        assert not r["noop"]
        assert core.get_state()["replay"]["position_t"] == 0.0

    def test_close_returns_to_idle(self, core):
        core.replay_open(GOLDEN_PATH)
        core.replay_close()
        assert core.mode == MODE_IDLE
        assert core.replay_close()["noop"]


class TestTelemetry:
    def test_flag_changed_precedes_frame_on_rise(self, core):
        sub = core.hub.subscribe(maxlen=4096)
        start_full_pipeline(core)
        for _ in range(40):  # crossing enters the zone at t=1.2 (tick 24)
            core.tick_live()
        events = sub.drain()
        rise = next(i for i, e in enumerate(events)
                    if isinstance(e, FlagChangedEvent) and e.flag)
        nxt = next(e for e in events[rise + 1:] if isinstance(e, FrameEvent))
        assert events[rise].t == pytest.approx(1.2)
        assert nxt.frame.t == pytest.approx(1.2)
        assert nxt.frame.recorded_flag is True

    def test_period_closed_emitted_on_exit(self, core):
        sub = core.hub.subscribe(maxlen=8192)
        start_full_pipeline(core)
        for _ in range(120):  # through the 4.825 s exit plus debounce
            core.tick_live()
        periods = [e for e in sub.drain() if isinstance(e, PeriodClosedEvent)]
        assert len(periods) == 1
        assert periods[0].period.t_enter == pytest.approx(1.2)
        assert periods[0].period.t_exit == pytest.approx(4.85)

    def test_slow_subscriber_gets_drop_warning_not_stall(self, core):
        slow = core.hub.subscribe(maxlen=4)
        start_full_pipeline(core)
        for _ in range(50):
            assert core.tick_live() is not None  # loop never blocks
        events = slow.drain()
        assert isinstance(events[0], WarningEvent)
        assert "dropped" in events[0].message
        assert len(events) <= 5

    def test_seq_strictly_increasing_per_subscriber(self, core):
        sub = core.hub.subscribe(maxlen=4096)
        start_full_pipeline(core)
        for _ in range(30):
            core.tick_live()
        seqs = [e.seq for e in sub.drain() if e.seq is not None]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)

    def test_state_changes_broadcast(self, core):
        sub = core.hub.subscribe()
        core.start_run()
        core.stop_run()
        states = [e.state["mode"] for e in sub.drain() if isinstance(e, StateChangedEvent)]
        assert states == [MODE_LIVE, MODE_IDLE]


ENDPOINTS = [
    ("run_start", lambda c, rng: c.start_run()),
    ("run_stop", lambda c, rng: c.stop_run()),
    ("fsm_start", lambda c, rng: c.start_fsm()),
    ("fsm_stop", lambda c, rng: c.stop_fsm()),
    ("camera", lambda c, rng: c.start_camera()),
    ("pose", lambda c, rng: c.start_pose_estimate()),
    ("monitor", lambda c, rng: c.start_safety_monitoring()),
    ("record_on", lambda c, rng: c.set_recording(True)),
    ("record_off", lambda c, rng: c.set_recording(False)),
    ("replay_open", lambda c, rng: c.replay_open(GOLDEN_PATH)),
    ("replay_play", lambda c, rng: c.replay_control("play")),
    ("replay_pause", lambda c, rng: c.replay_control("pause")),
    ("replay_seek", lambda c, rng: c.replay_control("seek", float(rng.uniform(-1, 12)))),
    ("replay_speed", lambda c, rng: c.replay_control("speed", float(rng.choice([0.25, 0.5, 1, 2, 4])))),
    ("replay_close", lambda c, rng: c.replay_close()),
    ("state", lambda c, rng: c.get_state()),
    ("sessions", lambda c, rng: c.list_sessions()),
    ("tick_live", lambda c, rng: c.tick_live()),
    ("tick_replay", lambda c, rng: c.tick_replay(0.05)),
]


def check_invariants(core: ServiceCore) -> None:
    s = core.get_state()
    if s["recording"]:
        assert s["mode"] == MODE_LIVE
    if s["camera_on"] or s["fsm_running"]:
        assert s["mode"] == MODE_LIVE
    if s["pose_on"]:
        assert s["camera_on"]
    if s["monitor_on"]:
        assert s["pose_on"]
    assert (s["replay"] is not None) == (s["mode"] == MODE_REPLAYING)
    assert s["mode"] in (MODE_IDLE, MODE_LIVE, MODE_REPLAYING)
    if s["replay"] is not None:
        assert s["replay"]["speed"] > 0
        assert 0 <= s["replay"]["cursor"] < 200


def test_random_endpoint_walk_never_breaks_invariants(core):
    rng = np.random.default_rng(97)
    for _ in range(2000):
        name, call = ENDPOINTS[rng.integers(0, len(ENDPOINTS))]
        try:
            result = call(core, rng)
        except ApiError:
            pass  # typed refusals are part of the contract
        else:
            if isinstance(result, dict) and "ok" in result:
                assert result["ok"] is True
        check_invariants(core)


# ---------------------------------------------------------------------------
# HTTP layer


@pytest.fixture
def client(core):
    from fastapi.testclient import TestClient

    from safescene.service import build_app

    with TestClient(build_app(core)) as c:
        yield c


class TestHttp:
    def test_state_roundtrip(self, client):
        r = client.get("/api/state")
        assert r.status_code == 200
        assert r.json()["mode"] == MODE_IDLE

    def test_full_flow(self, client, core):
        assert client.post("/api/run/start").json()["ok"]
        assert client.post("/api/camera/start").json()["ok"]
        assert client.post("/api/pose/start").json()["ok"]
        assert client.post("/api/monitor/start").json()["ok"]
        assert client.post("/api/fsm/start").json()["ok"]
        assert client.post("/api/record", json={"on": True}).json()["ok"]
        for _ in range(10):
            core.tick_live()
        off = client.post("/api/record", json={"on": False}).json()
        assert off["samples"] == 10
        assert client.post("/api/run/stop").json()["ok"]
        opened = client.post("/api/replay/open", json={}).json()
        assert opened["path"] == off["path"]
        assert client.post("/api/replay/control", json={"action": "seek", "value": 0.2}).json()["ok"]
        assert client.post("/api/replay/control", json={"action": "speed", "value": 2.0}).json()["ok"]
        assert client.post("/api/replay/control", json={"action": "play"}).json()["ok"]
        assert client.post("/api/replay/close").json()["ok"]

    def test_typed_errors_as_json(self, client):
        r = client.post("/api/fsm/start")
        assert r.status_code == 409
        assert r.json()["error"] == "InvalidTransition"
        r = client.post("/api/run/start")
        r = client.post("/api/pose/start")
        assert r.status_code == 409
        assert r.json()["error"] == "DependencyNotRunning"

    def test_replay_open_error_mapping(self, client, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("meta: {version: 9}\nsamples:\n")
        r = client.post("/api/replay/open", json={"path": str(bad)})
        assert r.status_code == 422
        assert r.json()["error"] == "SchemaError"
        r = client.post("/api/replay/open", json={"path": str(tmp_path / "ghost.yaml")})
        assert r.status_code == 404
        assert r.json()["error"] == "NotFound"

    def test_bad_replay_action_is_422(self, client):
        client.post("/api/replay/open", json={"path": str(GOLDEN_PATH)})
        r = client.post("/api/replay/control", json={"action": "warp"})
        assert r.status_code == 422
        assert r.json()["error"] == "BadRequest"

    def test_sessions_listing_includes_periods(self, client, core):
        client.post("/api/run/start")
        client.post("/api/camera/start")
        client.post("/api/pose/start")
        client.post("/api/monitor/start")
        client.post("/api/record", json={"on": True})
        for _ in range(120):
            core.tick_live()
        client.post("/api/record", json={"on": False})
        sessions = client.get("/api/sessions").json()
        assert len(sessions) == 1
        assert sessions[0]["samples"] == 120
        assert sessions[0]["period_count"] == 1
        (enter, exit_), = sessions[0]["periods"]
        assert enter == pytest.approx(1.2)

    def test_unknown_route_is_404(self, client):
        assert client.post("/api/launch/rviz").status_code == 404


def test_realtime_driver_warns_on_clock_stall(core):
    import time as _time

    from safescene.service import RealtimeDriver

    sub = core.hub.subscribe(maxlen=2048)
    core.start_run()
    real_tick = core.tick_live

    def slow_tick():
        _time.sleep(3.0 / core.cfg.rate_hz)  # three frame periods per tick
        return real_tick()

    core.tick_live = slow_tick
    driver = RealtimeDriver(core)
    driver.start()
    try:
        deadline = _time.monotonic() + 5.0
        while _time.monotonic() < deadline:
            warns = [e for e in sub.drain() if isinstance(e, WarningEvent) and "stall" in e.message]
            if warns:
                break
            _time.sleep(0.05)
        else:
            pytest.fail("no clock-stall warning within 5 s")
    finally:
        driver.stop()
        driver.join(timeout=5.0)
    core.tick_live = real_tick
    core.stop_run()


def test_telemetry_stream_is_ndjson_over_real_server(core):
    # the in-process test client buffers whole responses, so the push
    # stream is exercised against a real server on an ephemeral port
    import threading
    import time

    import httpx
    import uvicorn

    from safescene.service import build_app

    server = uvicorn.Server(uvicorn.Config(build_app(core), host="127.0.0.1", port=0, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.monotonic() + 10.0
        while not server.started:
            assert time.monotonic() < deadline, "server never started"
            time.sleep(0.02)
        port = server.servers[0].sockets[0].getsockname()[1]
        with httpx.stream("GET", f"http://127.0.0.1:{port}/api/telemetry", timeout=10.0) as r:
            assert r.status_code == 200
            assert r.headers["content-type"].startswith("application/x-ndjson")
            lines = r.iter_lines()
            first = json.loads(next(lines))
            assert first["type"] == "state_changed"
            assert first["state"]["mode"] == MODE_IDLE
            core.warn("poke")
            second = json.loads(next(lines))
            assert second["type"] == "warning"
            assert second["message"] == "poke"
            core.warn("unblock")  # lets the generator reach a yield and notice the close
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)
