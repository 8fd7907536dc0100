// Button enablement mirrors the server's preconditions exactly: a control
// is disabled iff the endpoint would answer with a typed error right now.

import type { SystemState } from "./types.js";

export type ButtonId =
  | "start_running"
  | "stop_running"
  | "start_fsm"
  | "stop_fsm"
  | "start_camera"
  | "start_pose_estimate"
  | "start_safety_monitoring"
  | "record"
  | "replay_open"
  | "replay_play"
  | "replay_pause"
  | "replay_seek"
  | "replay_speed"
  | "replay_close";

export function buttonEnabled(id: ButtonId, s: SystemState): boolean {
  const live = s.mode === "live_running";
  const replaying = s.mode === "replaying";
  switch (id) {
    case "start_running":
      return !replaying;
    case "stop_running":
      return live;
    case "start_fsm":
    case "stop_fsm":
      return live;
    case "start_camera":
      return live;
    case "start_pose_estimate":
      return live && s.camera_on;
    case "start_safety_monitoring":
      return live && s.pose_on;
    case "record":
      return live;
    case "replay_open":
      return !live;
    case "replay_play":
    case "replay_pause":
    case "replay_seek":
    case "replay_speed":
    case "replay_close":
      return replaying;
  }
}

export function enabledButtons(s: SystemState): ButtonId[] {
  const all: ButtonId[] = [
    "start_running",
    "stop_running",
    "start_fsm",
    "stop_fsm",
    "start_camera",
    "start_pose_estimate",
    "start_safety_monitoring",
    "record",
    "replay_open",
    "replay_play",
    "replay_pause",
    "replay_seek",
    "replay_speed",
    "replay_close",
  ];
  return all.filter((id) => buttonEnabled(id, s));
}
