"""Strict dict codecs for the YAML blocks shared by session files and scene configs.

Every reader is strict: missing keys, unknown keys, and wrong types raise
SchemaError; values that parse but break a domain invariant raise
ValidationError. Paths in messages are dotted ("meta.camera.fx") so a bad
file points at itself.
"""

from __future__ import annotations

from typing import Any, Mapping, Sequence

import numpy as np

from .errors import SchemaError, ValidationError
from .geometry import BasePoint, CameraIntrinsics, RigidTransform, TablePlane
from .kinematics import JointSpec, KinematicChain
from .monitor import MonitorConfig, SafetyZone


def require_mapping(v: Any, path: str) -> Mapping:
    if not isinstance(v, Mapping):
        raise SchemaError(f"{path}: expected a mapping, got {type(v).__name__}")
    return v


def take(d: Mapping, key: str, path: str) -> Any:
    if key not in d:
        raise SchemaError(f"{path}: missing required key '{key}'")
    return d[key]


def no_extras(d: Mapping, allowed: Sequence[str], path: str) -> None:
    extras = [k for k in d if k not in allowed]
    if extras:
        raise SchemaError(f"{path}: unknown keys {extras}")


def as_float(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{path}: expected a number, got {v!r}")
    return float(v)


def as_int(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{path}: expected an integer, got {v!r}")
    return v


def as_bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        raise SchemaError(f"{path}: expected a boolean, got {v!r}")
    return v


def as_str(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise SchemaError(f"{path}: expected a string, got {v!r}")
    return v


def as_float_list(v: Any, n: int, path: str) -> list[float]:
    if not isinstance(v, list) or len(v) != n:
        raise SchemaError(f"{path}: expected a list of {n} numbers, got {v!r}")
    return [as_float(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _build(factory, path: str):
    """Run a domain constructor, converting its ValueError into ValidationError."""
    try:
        return factory()
    except ValueError as e:
        raise ValidationError(f"{path}: {e}") from e


# camera ------------------------------------------------------------------

def camera_to_dict(cam: CameraIntrinsics) -> dict:
    return {
        "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
        "width": cam.width, "height": cam.height,
    }


def camera_from_dict(v: Any, path: str) -> CameraIntrinsics:
    d = require_mapping(v, path)
    no_extras(d, ["fx", "fy", "cx", "cy", "width", "height"], path)
    return _build(
        lambda: CameraIntrinsics(
            fx=as_float(take(d, "fx", path), f"{path}.fx"),
            fy=as_float(take(d, "fy", path), f"{path}.fy"),
            cx=as_float(take(d, "cx", path), f"{path}.cx"),
            cy=as_float(take(d, "cy", path), f"{path}.cy"),
            width=as_int(take(d, "width", path), f"{path}.width"),
            height=as_int(take(d, "height", path), f"{path}.height"),
        ),
        path,
    )


# rigid transform -----------------------------------------------------------

def transform_to_dict(t: RigidTransform) -> dict:
    return {
        "rotation_rowmajor": [float(x) for x in t.rotation.reshape(9)],
        "translation_m": [float(x) for x in t.translation],
    }


def transform_from_dict(v: Any, path: str) -> RigidTransform:
    d = require_mapping(v, path)
    no_extras(d, ["rotation_rowmajor", "translation_m"], path)
    rot = as_float_list(take(d, "rotation_rowmajor", path), 9, f"{path}.rotation_rowmajor")
    tr = as_float_list(take(d, "translation_m", path), 3, f"{path}.translation_m")
    return _build(lambda: RigidTransform(np.array(rot).reshape(3, 3), np.array(tr)), path)


# zone / table --------------------------------------------------------------

def zone_to_dict(zone: SafetyZone) -> dict:
    lo, hi = zone.min_corner, zone.max_corner
    return {"min_m": [lo.x, lo.y, lo.z], "max_m": [hi.x, hi.y, hi.z]}


def zone_from_dict(v: Any, path: str) -> SafetyZone:
    d = require_mapping(v, path)
    no_extras(d, ["min_m", "max_m"], path)
    lo = as_float_list(take(d, "min_m", path), 3, f"{path}.min_m")
    hi = as_float_list(take(d, "max_m", path), 3, f"{path}.max_m")
    return _build(lambda: SafetyZone(BasePoint(*lo), BasePoint(*hi)), path)


def table_to_dict(table: TablePlane) -> dict:
    return {"z0_m": table.z0}


def table_from_dict(v: Any, path: str) -> TablePlane:
    d = require_mapping(v, path)
    no_extras(d, ["z0_m"], path)
    return _build(lambda: TablePlane(as_float(take(d, "z0_m", path), f"{path}.z0_m")), path)


# monitor tuning -------------------------------------------------------------

def monitor_to_dict(cfg: MonitorConfig) -> dict:
    return {
        "exit_debounce_frames": cfg.exit_debounce_frames,
        "missing_failsafe_frames": cfg.missing_failsafe_frames,
        "confidence_min": cfg.confidence_min,
        "projection_mode": cfg.projection_mode,
    }


def monitor_from_dict(v: Any, path: str) -> MonitorConfig:
    d = require_mapping(v, path)
    no_extras(
        d,
        ["exit_debounce_frames", "missing_failsafe_frames", "confidence_min", "projection_mode"],
        path,
    )
    return _build(
        lambda: MonitorConfig(
            exit_debounce_frames=as_int(take(d, "exit_debounce_frames", path), f"{path}.exit_debounce_frames"),
            missing_failsafe_frames=as_int(take(d, "missing_failsafe_frames", path), f"{path}.missing_failsafe_frames"),
            confidence_min=as_float(take(d, "confidence_min", path), f"{path}.confidence_min"),
            projection_mode=as_str(take(d, "projection_mode", path), f"{path}.projection_mode"),
        ),
        path,
    )


# kinematic chain -------------------------------------------------------------

def chain_to_dict(chain: KinematicChain) -> dict:
    return {
        "base_name": chain.base_name,
        "tool_offset": transform_to_dict(chain.tool_offset),
        "joints": [
            {
                "name": j.name,
                "axis": list(j.axis),
                "origin": transform_to_dict(j.origin),
                "limits_rad": list(j.limits),
            }
            for j in chain.joints
        ],
    }


def chain_from_dict(v: Any, path: str) -> KinematicChain:
    d = require_mapping(v, path)
    no_extras(d, ["base_name", "tool_offset", "joints"], path)
    base = as_str(take(d, "base_name", path), f"{path}.base_name")
    tool = transform_from_dict(take(d, "tool_offset", path), f"{path}.tool_offset")
    raw_joints = take(d, "joints", path)
    if not isinstance(raw_joints, list):
        raise SchemaError(f"{path}.joints: expected a list, got {type(raw_joints).__name__}")
    joints = []
    for i, rj in enumerate(raw_joints):
        jp = f"{path}.joints[{i}]"
        jd = require_mapping(rj, jp)
        no_extras(jd, ["name", "axis", "origin", "limits_rad"], jp)
        name = as_str(take(jd, "name", jp), f"{jp}.name")
        axis = as_float_list(take(jd, "axis", jp), 3, f"{jp}.axis")
        origin = transform_from_dict(take(jd, "origin", jp), f"{jp}.origin")
        limits = as_float_list(take(jd, "limits_rad", jp), 2, f"{jp}.limits_rad")
        joints.append(
            _build(
                lambda: JointSpec(name=name, axis=tuple(axis), origin=origin, limits=(limits[0], limits[1])),
                jp,
            )
        )
    return _build(lambda: KinematicChain(base_name=base, joints=tuple(joints), tool_offset=tool), path)
