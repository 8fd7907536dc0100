// Wire types mirrored from the service API. The console renders these as
// received and never recomputes safety semantics client-side.

export interface ReplayInfo {
  path: string;
  duration_s: number;
  position_t: number;
  cursor: number;
  speed: number;
  playing: boolean;
}

export interface SystemState {
  mode: "idle" | "live_running" | "replaying";
  camera_on: boolean;
  pose_on: boolean;
  monitor_on: boolean;
  fsm_running: boolean;
  recording: boolean;
  active_session_path: string | null;
  replay: ReplayInfo | null;
}

export interface TransformDict {
  rotation_rowmajor: number[];
  translation_m: [number, number, number];
}

export interface SceneFrame {
  t: number;
  link_poses: TransformDict[];
  wrist_base: [number, number, number] | null;
  recorded_flag: boolean | null;
  recomputed_flag: boolean | null;
  consistency: boolean | null;
  warmup: boolean;
}

export interface FrameSampleFields {
  t: number;
  joints_rad: number[];
  wrist_px: [number, number] | null;
  wrist_depth_m: number | null;
  wrist_conf: number;
  safety_flag: boolean;
}

export type TelemetryEvent =
  | { type: "frame"; seq: number; origin: "live" | "replay"; frame: SceneFrame; sample: FrameSampleFields | null }
  | { type: "flag_changed"; seq: number; t: number; flag: boolean; failsafe: boolean; origin: string }
  | { type: "period_closed"; seq: number; t_enter: number; t_exit: number }
  | { type: "state_changed"; seq: number; state: SystemState }
  | { type: "warning"; seq: number | null; message: string }
  | { type: "heartbeat" };

export interface SessionInfo {
  path: string;
  name: string;
  created_unix?: number;
  duration_s?: number;
  samples?: number;
  period_count?: number;
  periods?: [number, number][];
  error?: string;
}

export function freshState(): SystemState {
  return {
    mode: "idle",
    camera_on: false,
    pose_on: false,
    monitor_on: false,
    fsm_running: false,
    recording: false,
    active_session_path: null,
    replay: null,
  };
}
