"""safescene: a simulated human-robot collaboration cell with safety-zone
monitoring, YAML session recording, and scene replay behind an operator API."""

from .config import SceneConfig, default_scene_config, load_scene_config
from .geometry import (
    BasePoint,
    CameraIntrinsics,
    PixelPoint,
    RigidTransform,
    TablePlane,
    back_project_depth,
    back_project_plane,
    compose,
    invert,
    project,
)
from .kinematics import JointSpec, JointState, KinematicChain, forward_kinematics, tool_position
from .monitor import (
    MonitorConfig,
    MonitorState,
    SafetyMonitor,
    SafetyPeriod,
    SafetyZone,
    WristObservation,
    WristTrack,
    contains,
    predict,
)
from .recording import FrameSample, SessionMeta, SessionRecording, load, open_writer, validate, write
from .replay import ReplaySession, SceneFrame, hand_frame, joint_frame, scene_frame
from .scene import LiveLoop, TaskFsm, fsm_step, run_live, wrist_observe

__version__ = "0.1.0"

__all__ = [
    "BasePoint",
    "CameraIntrinsics",
    "FrameSample",
    "JointSpec",
    "JointState",
    "KinematicChain",
    "LiveLoop",
    "MonitorConfig",
    "MonitorState",
    "PixelPoint",
    "ReplaySession",
    "RigidTransform",
    "SafetyMonitor",
    "SafetyPeriod",
    "SafetyZone",
    "SceneConfig",
    "SceneFrame",
    "SessionMeta",
    "SessionRecording",
    "TablePlane",
    "TaskFsm",
    "WristObservation",
    "WristTrack",
    "back_project_depth",
    "back_project_plane",
    "compose",
    "contains",
    "default_scene_config",
    "forward_kinematics",
    "fsm_step",
    "hand_frame",
    "invert",
    "joint_frame",
    "load",
    "load_scene_config",
    "open_writer",
    "predict",
    "project",
    "run_live",
    "scene_frame",
    "tool_position",
    "validate",
    "wrist_observe",
    "write",
]
