"""Serial-chain forward kinematics for drawing recorded joint states.

Revolute joints only. Each joint k contributes origin_k * Rot(axis_k, q_k);
link pose i is the left-to-right product over joints 0..i, and the tool
frame hangs off the last link by a fixed offset.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch
from .geometry import BasePoint, RigidTransform, compose, rotation_about

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint: fixed mount transform plus a rotation axis."""

    name: str
    axis: tuple[float, float, float]
    origin: RigidTransform
    limits: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("joint name must be non-empty")
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or not np.all(np.isfinite(a)):
            raise ValueError(f"axis must be a finite 3-vector, got {self.axis!r}")
        if abs(float(np.linalg.norm(a)) - 1.0) > _UNIT_TOL:
            raise ValueError(f"axis must be unit length, got norm {np.linalg.norm(a)!r}")
        lo, hi = self.limits
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"limits must satisfy min < max, got {self.limits!r}")
        object.__setattr__(self, "axis", (float(a[0]), float(a[1]), float(a[2])))
        object.__setattr__(self, "limits", (float(lo), float(hi)))


@dataclass(frozen=True)
class KinematicChain:
    base_name: str
    joints: tuple[JointSpec, ...]
    tool_offset: RigidTransform

    def __post_init__(self) -> None:
        joints = tuple(self.joints)
        if len(joints) < 1:
            raise ValueError("chain needs at least one joint")
        names = [j.name for j in joints]
        if len(set(names)) != len(names):
            raise ValueError(f"joint names must be unique, got {names}")
        object.__setattr__(self, "joints", joints)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def total_length(self) -> float:
        """Sum of fixed link translations; a Lipschitz bound for tool motion."""
        length = sum(float(np.linalg.norm(j.origin.translation)) for j in self.joints)
        return length + float(np.linalg.norm(self.tool_offset.translation))


@dataclass(frozen=True)
class JointState:
    """Joint angles in radians, one per joint of some chain."""

    angles: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))


def _angles_of(q: "JointState | Sequence[float]") -> tuple[float, ...]:
    if isinstance(q, JointState):
        return q.angles
    return tuple(float(a) for a in q)


def limit_violations(
    chain: KinematicChain, q: "JointState | Sequence[float]"
) -> list[tuple[str, float, float, float]]:
    """(name, angle, lo, hi) for every joint outside its limits."""
    angles = _angles_of(q)
    if len(angles) != chain.dof:
        raise LengthMismatch(f"{len(angles)} angles for a {chain.dof}-joint chain")
    out = []
    for spec, angle in zip(chain.joints, angles):
        lo, hi = spec.limits
        if not (lo <= angle <= hi):
            out.append((spec.name, angle, lo, hi))
    return out


def clamp_to_limits(
    chain: KinematicChain, q: "JointState | Sequence[float]", *, warn: bool = True
) -> tuple[float, ...]:
    """Clamp out-of-range angles for display; recorded data may clip slightly."""
    angles = _angles_of(q)
    if len(angles) != chain.dof:
        raise LengthMismatch(f"{len(angles)} angles for a {chain.dof}-joint chain")
    clamped = []
    for spec, angle in zip(chain.joints, angles):
        lo, hi = spec.limits
        v = min(max(angle, lo), hi)
        if v != angle and warn:
            logger.warning("joint %s angle %.6f outside [%.6f, %.6f], clamping", spec.name, angle, lo, hi)
        clamped.append(v)
    return tuple(clamped)


def forward_kinematics(
    chain: KinematicChain, q: "JointState | Sequence[float]"
) -> list[RigidTransform]:
    """Base-frame pose of every link frame, then the tool frame (dof + 1 entries)."""
    angles = _angles_of(q)
    if len(angles) != chain.dof:
        raise LengthMismatch(f"{len(angles)} angles for a {chain.dof}-joint chain")
    poses: list[RigidTransform] = []
    current = RigidTransform.identity()
    for spec, angle in zip(chain.joints, angles):
        spin = RigidTransform(rotation_about(spec.axis, angle), np.zeros(3))
        current = compose(current, compose(spec.origin, spin))
        poses.append(current)
    poses.append(compose(current, chain.tool_offset))
    return poses


def tool_position(chain: KinematicChain, q: "JointState | Sequence[float]") -> BasePoint:
    tool = forward_kinematics(chain, q)[-1]
    return BasePoint.from_array(tool.translation)
