// ConsoleModel: everything the UI renders, reduced purely from telemetry
// events. No speculation: state comes from state_changed, the scene from
// the last frame, flag color from server-reported flags.

import type { FrameSampleFields, SceneFrame, SystemState, TelemetryEvent } from "./types.js";
import { freshState } from "./types.js";

export interface LogEntry {
  seq: number | null;
  text: string;
}

export interface ReceivedFrame {
  frame: SceneFrame;
  sample: FrameSampleFields | null;
}

export interface ConsoleModel {
  state: SystemState;
  frame: SceneFrame | null;
  frameOrigin: "live" | "replay" | null;
  /** wall-clock ms when the last frame event arrived (staleness detector) */
  lastFrameAt: number | null;
  /** latched while the flag is up because tracking data went missing */
  failsafe: boolean;
  /** recent frames with their raw samples, newest last; hover inspector */
  frameRing: ReceivedFrame[];
  log: LogEntry[];
  /** periods reported while replaying or live, for the timeline bands */
  periods: [number, number][];
  connected: boolean;
}

export const FRAME_RING_CAPACITY = 256;
export const LOG_CAPACITY = 200;
export const STALE_AFTER_MS = 1000;

export function emptyModel(): ConsoleModel {
  return {
    state: freshState(),
    frame: null,
    frameOrigin: null,
    lastFrameAt: null,
    failsafe: false,
    frameRing: [],
    log: [],
    periods: [],
    connected: false,
  };
}

function pushLog(model: ConsoleModel, seq: number | null, text: string): void {
  model.log.push({ seq, text });
  if (model.log.length > LOG_CAPACITY) {
    model.log.splice(0, model.log.length - LOG_CAPACITY);
  }
}

/** Fold one telemetry event into the model (mutates and returns it). */
export function applyEvent(model: ConsoleModel, ev: TelemetryEvent, nowMs: number): ConsoleModel {
  switch (ev.type) {
    case "state_changed":
      model.state = ev.state;
      pushLog(model, ev.seq, `state: ${ev.state.mode}`);
      break;
    case "frame":
      model.frame = ev.frame;
      model.frameOrigin = ev.origin;
      model.lastFrameAt = nowMs;
      model.frameRing.push({ frame: ev.frame, sample: ev.sample ?? null });
      if (model.frameRing.length > FRAME_RING_CAPACITY) {
        model.frameRing.splice(0, model.frameRing.length - FRAME_RING_CAPACITY);
      }
      if (flagOf(ev.frame) === false) {
        model.failsafe = false;
      }
      break;
    case "flag_changed":
      model.failsafe = ev.flag && ev.failsafe;
      pushLog(model, ev.seq, `flag ${ev.flag ? "ON" : "off"} at ${ev.t.toFixed(2)}s${ev.failsafe ? " (fail-safe)" : ""}`);
      break;
    case "period_closed":
      model.periods.push([ev.t_enter, ev.t_exit]);
      pushLog(model, ev.seq, `safety period ${ev.t_enter.toFixed(2)}s to ${ev.t_exit.toFixed(2)}s`);
      break;
    case "warning":
      pushLog(model, ev.seq, `warning: ${ev.message}`);
      break;
    case "heartbeat":
      break;
  }
  return model;
}

/** The flag the server wants shown for a frame (recomputed wins in replay). */
export function flagOf(frame: SceneFrame): boolean | null {
  if (frame.recomputed_flag !== null) return frame.recomputed_flag;
  return frame.recorded_flag;
}

export type WristStatus = "missing" | "inside" | "outside";

export function wristStatus(frame: SceneFrame | null): WristStatus {
  if (frame === null || frame.wrist_base === null) return "missing";
  return flagOf(frame) ? "inside" : "outside";
}

export function isStale(model: ConsoleModel, nowMs: number): boolean {
  const active =
    model.state.mode === "live_running" ||
    (model.state.mode === "replaying" && model.state.replay !== null && model.state.replay.playing);
  if (!active || model.lastFrameAt === null) return false;
  return nowMs - model.lastFrameAt > STALE_AFTER_MS;
}

/** Nearest received frame to a timeline position, for the hover inspector. */
export function nearestFrame(model: ConsoleModel, t: number): ReceivedFrame | null {
  let best: ReceivedFrame | null = null;
  let bestDist = Infinity;
  for (const rf of model.frameRing) {
    const d = Math.abs(rf.frame.t - t);
    if (d < bestDist) {
      best = rf;
      bestDist = d;
    }
  }
  return best;
}
