import { describe, expect, it } from "vitest";

import {
  applyEvent,
  emptyModel,
  FRAME_RING_CAPACITY,
  isStale,
  LOG_CAPACITY,
  nearestFrame,
  wristStatus,
} from "../src/model.js";
import type { SceneFrame, TelemetryEvent } from "../src/types.js";
import { freshState } from "../src/types.js";

function frame(t: number, overrides: Partial<SceneFrame> = {}): SceneFrame {
  return {
    t,
    link_poses: [],
    wrist_base: [0.5, 0.1, 0.1],
    recorded_flag: false,
    recomputed_flag: false,
    consistency: true,
    warmup: false,
    ...overrides,
  };
}

function frameEvent(seq: number, t: number, overrides: Partial<SceneFrame> = {}): TelemetryEvent {
  return {
    type: "frame",
    seq,
    origin: "live",
    frame: frame(t, overrides),
    sample: {
      t,
      joints_rad: [0, 0],
      wrist_px: [320, 240],
      wrist_depth_m: 1.9,
      wrist_conf: 0.9,
      safety_flag: false,
    },
  };
}

describe("model reduction", () => {
  it("renders only what the server said (state + last frame)", () => {
    const m = emptyModel();
    applyEvent(m, { type: "state_changed", seq: 1, state: { ...freshState(), mode: "live_running" } }, 0);
    applyEvent(m, frameEvent(2, 0.0), 10);
    applyEvent(m, frameEvent(3, 0.05), 20);
    expect(m.state.mode).toBe("live_running");
    expect(m.frame?.t).toBe(0.05);
    expect(m.frameRing.map((rf) => rf.frame.t)).toEqual([0.0, 0.05]);
    expect(m.frameRing[0].sample?.wrist_px).toEqual([320, 240]);
  });

  it("event log preserves arrival order", () => {
    const m = emptyModel();
    applyEvent(m, { type: "flag_changed", seq: 1, t: 1.2, flag: true, failsafe: false, origin: "live" }, 0);
    applyEvent(m, { type: "period_closed", seq: 2, t_enter: 1.2, t_exit: 4.85 }, 0);
    applyEvent(m, { type: "warning", seq: 3, message: "subscriber too slow" }, 0);
    expect(m.log.map((e) => e.seq)).toEqual([1, 2, 3]);
    expect(m.log[0].text).toContain("flag ON");
    expect(m.log[1].text).toContain("1.20");
    expect(m.log[2].text).toContain("subscriber too slow");
  });

  it("log and frame ring are bounded", () => {
    const m = emptyModel();
    for (let i = 0; i < LOG_CAPACITY + 50; i++) {
      applyEvent(m, { type: "warning", seq: i, message: `w${i}` }, 0);
    }
    expect(m.log.length).toBe(LOG_CAPACITY);
    expect(m.log[0].text).toBe("warning: w50");
    for (let i = 0; i < FRAME_RING_CAPACITY + 10; i++) {
      applyEvent(m, frameEvent(i, i * 0.05), 0);
    }
    expect(m.frameRing.length).toBe(FRAME_RING_CAPACITY);
  });

  it("failsafe latches until the flag drops", () => {
    const m = emptyModel();
    applyEvent(m, { type: "flag_changed", seq: 1, t: 2.0, flag: true, failsafe: true, origin: "live" }, 0);
    expect(m.failsafe).toBe(true);
    applyEvent(m, frameEvent(2, 2.0, { recomputed_flag: true }), 0);
    expect(m.failsafe).toBe(true);
    applyEvent(m, frameEvent(3, 2.05, { recomputed_flag: false }), 0);
    expect(m.failsafe).toBe(false);
  });

  it("wrist status tracks flag and presence", () => {
    expect(wristStatus(null)).toBe("missing");
    expect(wristStatus(frame(0, { wrist_base: null }))).toBe("missing");
    expect(wristStatus(frame(0, { recomputed_flag: true }))).toBe("inside");
    expect(wristStatus(frame(0, { recomputed_flag: false }))).toBe("outside");
    // live frames with the monitor off carry no flags at all
    expect(wristStatus(frame(0, { recorded_flag: null, recomputed_flag: null }))).toBe("outside");
  });

  it("staleness fires after one second without frames, only while active", () => {
    const m = emptyModel();
    applyEvent(m, { type: "state_changed", seq: 1, state: { ...freshState(), mode: "live_running" } }, 0);
    applyEvent(m, frameEvent(2, 0.0), 1000);
    expect(isStale(m, 1900)).toBe(false);
    expect(isStale(m, 2100)).toBe(true);
    applyEvent(m, { type: "state_changed", seq: 3, state: freshState() }, 2200);
    expect(isStale(m, 5000)).toBe(false); // idle: nothing is expected
  });

  it("nearest frame serves the hover inspector", () => {
    const m = emptyModel();
    for (const t of [0.0, 0.05, 0.1, 0.15]) {
      applyEvent(m, frameEvent(1, t), 0);
    }
    expect(nearestFrame(m, 0.0701)?.frame.t).toBe(0.05);
    expect(nearestFrame(m, 0.09)?.frame.t).toBe(0.1);
    expect(nearestFrame(emptyModel(), 1.0)).toBeNull();
  });

  it("heartbeats change nothing", () => {
    const m = emptyModel();
    const before = JSON.stringify(m);
    applyEvent(m, { type: "heartbeat" }, 123);
    expect(JSON.stringify(m)).toBe(before);
  });
});
