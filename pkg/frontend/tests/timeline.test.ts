import { describe, expect, it } from "vitest";

import { applyEvent, emptyModel } from "../src/model.js";
import {
  cursorFraction,
  hoverInfo,
  periodBands,
  seekTargetFromFraction,
  SPEED_CHOICES,
} from "../src/timeline.js";
import type { ReplayInfo } from "../src/types.js";

function replay(overrides: Partial<ReplayInfo> = {}): ReplayInfo {
  return {
    path: "/data/session-1.yaml",
    duration_s: 10.0,
    position_t: 0.0,
    cursor: 0,
    speed: 1.0,
    playing: false,
    ...overrides,
  };
}

describe("timeline math", () => {
  it("click at 70% of a 10 s session seeks to 7.0", () => {
    expect(seekTargetFromFraction(0.7, 10.0)).toBeCloseTo(7.0, 12);
  });

  it("clicks outside the track clamp to the session bounds", () => {
    expect(seekTargetFromFraction(-0.2, 10.0)).toBe(0.0);
    expect(seekTargetFromFraction(1.7, 10.0)).toBe(10.0);
  });

  it("cursor fraction follows the logical position", () => {
    expect(cursorFraction(replay({ position_t: 2.5 }))).toBeCloseTo(0.25, 12);
    expect(cursorFraction(replay({ position_t: 99 }))).toBe(1);
    expect(cursorFraction(replay({ duration_s: 0 }))).toBe(0);
  });

  it("period bands scale into track fractions", () => {
    const bands = periodBands([[1.2, 4.85]], 10.0);
    expect(bands).toHaveLength(1);
    expect(bands[0].start).toBeCloseTo(0.12, 12);
    expect(bands[0].end).toBeCloseTo(0.485, 12);
  });

  it("bands clip to the visible track", () => {
    const bands = periodBands([[-1.0, 2.0], [9.0, 25.0], [30.0, 40.0]], 10.0);
    expect(bands).toHaveLength(2);
    expect(bands[0]).toEqual({ start: 0, end: 0.2 });
    expect(bands[1]).toEqual({ start: 0.9, end: 1 });
  });

  it("speed choices match the documented selector", () => {
    expect([...SPEED_CHOICES]).toEqual([0.25, 0.5, 1, 2, 4]);
  });

  it("hover inspector reports the raw sample fields of the nearest frame", () => {
    const m = emptyModel();
    applyEvent(m, {
      type: "frame",
      seq: 1,
      origin: "replay",
      frame: {
        t: 0.05,
        link_poses: [],
        wrist_base: [0.6, -0.03, 0.1],
        recorded_flag: true,
        recomputed_flag: true,
        consistency: true,
        warmup: false,
      },
      sample: {
        t: 0.05,
        joints_rad: [0.0, 0.41],
        wrist_px: [320.0, 32.8],
        wrist_depth_m: 1.9,
        wrist_conf: 0.83,
        safety_flag: false,
      },
    }, 0);
    const lines = hoverInfo(m, 0.07).join("\n");
    expect(lines).toContain("t=0.05");
    expect(lines).toContain("joints_rad=[0.000, 0.410]");
    expect(lines).toContain("wrist_px=(320.0, 32.8)");
    expect(lines).toContain("wrist_depth_m=1.900");
    expect(lines).toContain("wrist_conf=0.83");
    expect(lines).toContain("safety_flag=false");
    expect(lines).toContain("recorded_flag=true");
    expect(hoverInfo(emptyModel(), 1.0)[1]).toContain("no frame");
  });
});
