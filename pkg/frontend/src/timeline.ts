// Replay timeline helpers: scrubber geometry, snap display, period bands,
// and the hover inspector. Pure math so every rule is unit-testable.

import type { ConsoleModel } from "./model.js";
import { nearestFrame } from "./model.js";
import type { ReplayInfo } from "./types.js";

export const SPEED_CHOICES = [0.25, 0.5, 1, 2, 4] as const;

/** Map a click fraction [0, 1] of the track to a seek time in seconds. */
export function seekTargetFromFraction(fraction: number, durationS: number): number {
  const f = Math.min(1, Math.max(0, fraction));
  return f * durationS;
}

/** Where the cursor sits on the track, as a fraction of the duration. */
export function cursorFraction(replay: ReplayInfo): number {
  if (replay.duration_s <= 0) return 0;
  return Math.min(1, Math.max(0, replay.position_t / replay.duration_s));
}

export interface Band {
  /** track fractions, [start, end] with start < end */
  start: number;
  end: number;
}

/** Safety periods as track-fraction bands for the red overlay strip. */
export function periodBands(periods: [number, number][], durationS: number): Band[] {
  if (durationS <= 0) return [];
  return periods
    .filter(([enter, exit]) => exit > 0 && enter < durationS)
    .map(([enter, exit]) => ({
      start: Math.max(0, enter / durationS),
      end: Math.min(1, exit / durationS),
    }));
}

/** Hover text: raw sample fields of the nearest received frame. */
export function hoverInfo(model: ConsoleModel, t: number): string[] {
  const got = nearestFrame(model, t);
  if (!got) return [`t=${t.toFixed(2)}s`, "no frame received near here yet"];
  const { frame, sample } = got;
  const lines = [`frame t=${frame.t.toFixed(2)}s`];
  if (sample) {
    lines.push(
      `joints_rad=[${sample.joints_rad.map((v) => v.toFixed(3)).join(", ")}]`,
      sample.wrist_px
        ? `wrist_px=(${sample.wrist_px[0].toFixed(1)}, ${sample.wrist_px[1].toFixed(1)})`
        : "wrist_px=null",
      `wrist_depth_m=${sample.wrist_depth_m === null ? "null" : sample.wrist_depth_m.toFixed(3)}`,
      `wrist_conf=${sample.wrist_conf.toFixed(2)}  safety_flag=${sample.safety_flag}`,
    );
  } else if (frame.wrist_base) {
    lines.push(`wrist=(${frame.wrist_base.map((v) => v.toFixed(3)).join(", ")}) m`);
  } else {
    lines.push("wrist=missing");
  }
  lines.push(
    `recorded_flag=${fmtFlag(frame.recorded_flag)} recomputed=${fmtFlag(frame.recomputed_flag)}`,
    `consistency=${fmtFlag(frame.consistency)}${frame.warmup ? " (warming up)" : ""}`,
  );
  return lines;
}

function fmtFlag(v: boolean | null): string {
  return v === null ? "n/a" : String(v);
}
