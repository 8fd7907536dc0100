"""Scene configuration: the simulated cell, its camera, zone, task, and
wrist path, plus YAML load/save so new scenarios need no code.

The default scene is a top-down camera two meters above a tabletop robot,
a shared-workspace box in front of the robot, a cyclic joint-space task,
and a wrist path that enters the zone once, dwells two seconds, and leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import serialization as ser
from .errors import IoFailure, ParseError, SchemaError, ValidationError
from .geometry import BasePoint, CameraIntrinsics, RigidTransform, TablePlane
from .kinematics import JointSpec, KinematicChain
from .monitor import MonitorConfig, SafetyZone
from .recording import SessionMeta


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise standing in for a real camera + pose estimator."""

    px_sigma: float = 0.0
    depth_sigma: float = 0.0
    dropout_prob: float = 0.0

    def __post_init__(self) -> None:
        if self.px_sigma < 0 or self.depth_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ValueError(f"dropout_prob must be in [0, 1], got {self.dropout_prob!r}")


@dataclass(frozen=True)
class Waypoint:
    name: str
    joints_rad: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("waypoint name must be non-empty")
        object.__setattr__(self, "joints_rad", tuple(float(a) for a in self.joints_rad))


@dataclass(frozen=True)
class TaskPlan:
    """Cyclic joint-space route: waypoint i runs to waypoint i+1 (mod n)."""

    waypoints: tuple[Waypoint, ...]
    durations_s: tuple[float, ...]

    def __post_init__(self) -> None:
        wps = tuple(self.waypoints)
        durs = tuple(float(d) for d in self.durations_s)
        if len(wps) < 1:
            raise ValueError("task needs at least one waypoint")
        if len(durs) != len(wps):
            raise ValueError("need one segment duration per waypoint (cyclic route)")
        if any(not (d > 0 and math.isfinite(d)) for d in durs):
            raise ValueError("segment durations must be positive")
        dof = len(wps[0].joints_rad)
        if any(len(w.joints_rad) != dof for w in wps):
            raise ValueError("all waypoints must share the same joint count")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "durations_s", durs)

    @property
    def cycle_s(self) -> float:
        return sum(self.durations_s)


@dataclass(frozen=True)
class WristScript:
    """Piecewise-linear 3D wrist path, clamped at both ends."""

    knots: tuple[tuple[float, BasePoint], ...]

    def __post_init__(self) -> None:
        knots = tuple((float(t), p) for t, p in self.knots)
        if len(knots) < 1:
            raise ValueError("wrist script needs at least one knot")
        for (t0, _), (t1, _) in zip(knots, knots[1:]):
            if t1 <= t0:
                raise ValueError(f"knot times must be strictly increasing: {t0} -> {t1}")
        object.__setattr__(self, "knots", knots)

    def position_at(self, t: float) -> BasePoint:
        knots = self.knots
        if t <= knots[0][0]:
            return knots[0][1]
        if t >= knots[-1][0]:
            return knots[-1][1]
        for (t0, p0), (t1, p1) in zip(knots, knots[1:]):
            if t0 <= t <= t1:
                a = (t - t0) / (t1 - t0)
                return BasePoint.from_array(p0.as_array() * (1 - a) + p1.as_array() * a)
        raise AssertionError("unreachable: knot times are ordered")


@dataclass(frozen=True)
class SceneConfig:
    chain: KinematicChain
    camera: CameraIntrinsics
    extrinsic: RigidTransform
    zone: SafetyZone
    table: TablePlane
    task: TaskPlan
    wrist: WristScript
    monitor: MonitorConfig = MonitorConfig()
    noise: NoiseModel = NoiseModel()
    rate_hz: float = 20.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (self.rate_hz > 0 and math.isfinite(self.rate_hz)):
            raise ValueError(f"rate_hz must be > 0, got {self.rate_hz!r}")
        dof = self.chain.dof
        if any(len(w.joints_rad) != dof for w in self.task.waypoints):
            raise ValueError("task waypoints do not match the chain's joint count")

    def session_meta(self, created_unix: float) -> SessionMeta:
        return SessionMeta(
            rate_hz=self.rate_hz,
            created_unix=created_unix,
            camera=self.camera,
            extrinsic=self.extrinsic,
            zone=self.zone,
            table=self.table,
            monitor=self.monitor,
            chain=self.chain,
        )


# ---------------------------------------------------------------------------
# default scene


def default_chain() -> KinematicChain:
    """Reference 6R tabletop arm with 0.3 m main links."""
    rot_id = np.eye(3)
    def trans(x: float, y: float, z: float) -> RigidTransform:
        return RigidTransform(rot_id, np.array([x, y, z]))
    wide = (-math.pi, math.pi)
    mid = (-2.6, 2.6)
    joints = (
        JointSpec("base_yaw", (0.0, 0.0, 1.0), trans(0.0, 0.0, 0.1), wide),
        JointSpec("shoulder", (0.0, 1.0, 0.0), trans(0.0, 0.0, 0.2), mid),
        JointSpec("elbow", (0.0, 1.0, 0.0), trans(0.3, 0.0, 0.0), mid),
        JointSpec("wrist_roll", (1.0, 0.0, 0.0), trans(0.3, 0.0, 0.0), wide),
        JointSpec("wrist_pitch", (0.0, 1.0, 0.0), trans(0.15, 0.0, 0.0), mid),
        JointSpec("wrist_yaw", (0.0, 0.0, 1.0), trans(0.1, 0.0, 0.0), wide),
    )
    return KinematicChain(base_name="base", joints=joints, tool_offset=trans(0.1, 0.0, 0.0))


def default_extrinsic() -> RigidTransform:
    """Camera 2 m above the zone center, looking straight down.

    Camera x maps to base +x, camera y (image down) to base -y, optical
    axis to base -z.
    """
    r = np.array([
        [1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
    ])
    return RigidTransform(r, np.array([0.6, 0.0, 2.0]))


def default_scene_config() -> SceneConfig:
    zone = SafetyZone(BasePoint(0.3, -0.3, 0.0), BasePoint(0.9, 0.3, 0.6))
    wrist = WristScript((
        (0.0, BasePoint(0.6, 0.77, 0.1)),
        (2.0, BasePoint(0.6, -0.03, 0.1)),
        (4.0, BasePoint(0.6, -0.03, 0.1)),
        (6.0, BasePoint(0.6, 0.77, 0.1)),
        (10.0, BasePoint(0.6, 0.77, 0.1)),
    ))
    task = TaskPlan(
        waypoints=(
            Waypoint("home", (0.0, 0.4, 0.9, 0.0, 0.5, 0.0)),
            Waypoint("pick", (0.6, 0.8, 0.6, 0.2, 0.7, 0.3)),
            Waypoint("lift", (0.3, 0.3, 1.1, -0.2, 0.4, -0.2)),
            Waypoint("place", (-0.5, 0.7, 0.8, 0.1, 0.6, 0.1)),
        ),
        durations_s=(2.0, 2.0, 2.0, 2.0),
    )
    return SceneConfig(
        chain=default_chain(),
        camera=CameraIntrinsics(fx=525.0, fy=525.0, cx=320.0, cy=240.0, width=640, height=480),
        extrinsic=default_extrinsic(),
        zone=zone,
        table=TablePlane(0.0),
        task=task,
        wrist=wrist,
        monitor=MonitorConfig(),
        noise=NoiseModel(),
        rate_hz=20.0,
        rng_seed=42,
    )


# ---------------------------------------------------------------------------
# YAML in/out

_TOP_KEYS = (
    "rate_hz", "rng_seed", "camera", "extrinsic", "zone", "table",
    "noise", "monitor", "chain", "task", "wrist_script",
)


def scene_config_to_dict(cfg: SceneConfig) -> dict:
    return {
        "rate_hz": cfg.rate_hz,
        "rng_seed": cfg.rng_seed,
        "camera": ser.camera_to_dict(cfg.camera),
        "extrinsic": ser.transform_to_dict(cfg.extrinsic),
        "zone": ser.zone_to_dict(cfg.zone),
        "table": ser.table_to_dict(cfg.table),
        "noise": {
            "px_sigma": cfg.noise.px_sigma,
            "depth_sigma": cfg.noise.depth_sigma,
            "dropout_prob": cfg.noise.dropout_prob,
        },
        "monitor": ser.monitor_to_dict(cfg.monitor),
        "chain": ser.chain_to_dict(cfg.chain),
        "task": {
            "waypoints": [
                {"name": w.name, "joints_rad": list(w.joints_rad)} for w in cfg.task.waypoints
            ],
            "durations_s": list(cfg.task.durations_s),
        },
        "wrist_script": [
            {"t": t, "p_m": [p.x, p.y, p.z]} for t, p in cfg.wrist.knots
        ],
    }


def scene_config_from_dict(data: Any, source: str = "<config>") -> SceneConfig:
    d = ser.require_mapping(data, source)
    ser.no_extras(d, _TOP_KEYS, source)

    raw_noise = ser.require_mapping(ser.take(d, "noise", source), f"{source}.noise")
    ser.no_extras(raw_noise, ["px_sigma", "depth_sigma", "dropout_prob"], f"{source}.noise")

    raw_task = ser.require_mapping(ser.take(d, "task", source), f"{source}.task")
    ser.no_extras(raw_task, ["waypoints", "durations_s"], f"{source}.task")
    raw_wps = ser.take(raw_task, "waypoints", f"{source}.task")
    if not isinstance(raw_wps, list):
        raise SchemaError(f"{source}.task.waypoints: expected a list")
    waypoints = []
    for i, rw in enumerate(raw_wps):
        wp_path = f"{source}.task.waypoints[{i}]"
        wd = ser.require_mapping(rw, wp_path)
        ser.no_extras(wd, ["name", "joints_rad"], wp_path)
        raw_j = ser.take(wd, "joints_rad", wp_path)
        if not isinstance(raw_j, list):
            raise SchemaError(f"{wp_path}.joints_rad: expected a list")
        joints = tuple(ser.as_float(a, f"{wp_path}.joints_rad[{k}]") for k, a in enumerate(raw_j))
        waypoints.append(Waypoint(ser.as_str(ser.take(wd, "name", wp_path), f"{wp_path}.name"), joints))
    raw_durs = ser.take(raw_task, "durations_s", f"{source}.task")
    if not isinstance(raw_durs, list):
        raise SchemaError(f"{source}.task.durations_s: expected a list")
    durations = tuple(ser.as_float(x, f"{source}.task.durations_s[{i}]") for i, x in enumerate(raw_durs))

    raw_script = ser.take(d, "wrist_script", source)
    if not isinstance(raw_script, list):
        raise SchemaError(f"{source}.wrist_script: expected a list")
    knots = []
    for i, rk in enumerate(raw_script):
        kp = f"{source}.wrist_script[{i}]"
        kd = ser.require_mapping(rk, kp)
        ser.no_extras(kd, ["t", "p_m"], kp)
        t = ser.as_float(ser.take(kd, "t", kp), f"{kp}.t")
        p = ser.as_float_list(ser.take(kd, "p_m", kp), 3, f"{kp}.p_m")
        knots.append((t, BasePoint(*p)))

    def build() -> SceneConfig:
        return SceneConfig(
            chain=ser.chain_from_dict(ser.take(d, "chain", source), f"{source}.chain"),
            camera=ser.camera_from_dict(ser.take(d, "camera", source), f"{source}.camera"),
            extrinsic=ser.transform_from_dict(ser.take(d, "extrinsic", source), f"{source}.extrinsic"),
            zone=ser.zone_from_dict(ser.take(d, "zone", source), f"{source}.zone"),
            table=ser.table_from_dict(ser.take(d, "table", source), f"{source}.table"),
            task=TaskPlan(tuple(waypoints), durations),
            wrist=WristScript(tuple(knots)),
            monitor=ser.monitor_from_dict(ser.take(d, "monitor", source), f"{source}.monitor"),
            noise=NoiseModel(
                px_sigma=ser.as_float(ser.take(raw_noise, "px_sigma", f"{source}.noise"), f"{source}.noise.px_sigma"),
                depth_sigma=ser.as_float(ser.take(raw_noise, "depth_sigma", f"{source}.noise"), f"{source}.noise.depth_sigma"),
                dropout_prob=ser.as_float(ser.take(raw_noise, "dropout_prob", f"{source}.noise"), f"{source}.noise.dropout_prob"),
            ),
            rate_hz=ser.as_float(ser.take(d, "rate_hz", source), f"{source}.rate_hz"),
            rng_seed=ser.as_int(ser.take(d, "rng_seed", source), f"{source}.rng_seed"),
        )

    try:
        return build()
    except ValueError as e:
        raise ValidationError(f"{source}: {e}") from e


def load_scene_config(path: str | Path) -> SceneConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ParseError(f"{path}: malformed YAML: {e}") from e
    return scene_config_from_dict(data, source=str(path))


def save_scene_config(cfg: SceneConfig, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(yaml.safe_dump(scene_config_to_dict(cfg), sort_keys=False), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    return path
