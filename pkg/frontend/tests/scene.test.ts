import { describe, expect, it } from "vitest";

import { applyEvent, emptyModel } from "../src/model.js";
import { COLORS, DEFAULT_VIEWPORT, drawScene, toCanvas, type Draw2D } from "../src/scene.js";
import type { SceneFrame, TelemetryEvent } from "../src/types.js";
import { freshState } from "../src/types.js";

class RecordingCtx implements Draw2D {
  calls: string[] = [];
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";
  globalAlpha = 1;
  texts: string[] = [];
  fills: string[] = [];
  strokes: string[] = [];

  clearRect(): void { this.calls.push("clearRect"); }
  strokeRect(): void { this.calls.push("strokeRect"); this.strokes.push(String(this.strokeStyle)); }
  fillRect(): void { this.calls.push("fillRect"); }
  beginPath(): void { this.calls.push("beginPath"); }
  moveTo(): void { this.calls.push("moveTo"); }
  lineTo(): void { this.calls.push("lineTo"); }
  arc(): void { this.calls.push("arc"); }
  stroke(): void { this.calls.push("stroke"); this.strokes.push(String(this.strokeStyle)); }
  fill(): void { this.calls.push("fill"); this.fills.push(String(this.fillStyle)); }
  fillText(text: string): void { this.texts.push(text); }
}

function frame(overrides: Partial<SceneFrame> = {}): SceneFrame {
  return {
    t: 1.0,
    link_poses: [
      { rotation_rowmajor: [1, 0, 0, 0, 1, 0, 0, 0, 1], translation_m: [0.3, 0.0, 0.3] },
      { rotation_rowmajor: [1, 0, 0, 0, 1, 0, 0, 0, 1], translation_m: [0.6, 0.0, 0.3] },
    ],
    wrist_base: [0.6, 0.0, 0.1],
    recorded_flag: false,
    recomputed_flag: false,
    consistency: true,
    warmup: false,
    ...overrides,
  };
}

function modelWithFrame(f: SceneFrame, origin: "live" | "replay" = "live") {
  const m = emptyModel();
  const ev: TelemetryEvent = { type: "frame", seq: 1, origin, frame: f, sample: null };
  applyEvent(m, ev, 0);
  return m;
}

const ZONE = { min: [0.3, -0.3] as [number, number], max: [0.9, 0.3] as [number, number] };

describe("top-down scene rendering", () => {
  it("canvas mapping puts the viewport center mid-canvas, y up", () => {
    const [cx, cy] = toCanvas(DEFAULT_VIEWPORT, DEFAULT_VIEWPORT.centerX, DEFAULT_VIEWPORT.centerY);
    expect(cx).toBe(DEFAULT_VIEWPORT.width / 2);
    expect(cy).toBe(DEFAULT_VIEWPORT.height / 2);
    const [, above] = toCanvas(DEFAULT_VIEWPORT, DEFAULT_VIEWPORT.centerX, DEFAULT_VIEWPORT.centerY + 0.5);
    expect(above).toBeLessThan(cy);
  });

  it("draws the zone rectangle in the zone color", () => {
    const ctx = new RecordingCtx();
    drawScene(ctx, emptyModel(), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx.calls).toContain("strokeRect");
    expect(ctx.strokes).toContain(COLORS.zone);
  });

  it("wrist marker is green outside and red inside", () => {
    const ctx = new RecordingCtx();
    drawScene(ctx, modelWithFrame(frame({ recomputed_flag: false })), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx.fills).toContain(COLORS.wristOutside);
    const ctx2 = new RecordingCtx();
    drawScene(ctx2, modelWithFrame(frame({ recomputed_flag: true })), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx2.fills).toContain(COLORS.wristInside);
  });

  it("missing wrist draws a gray ring at the last known spot", () => {
    const m = emptyModel();
    applyEvent(m, { type: "frame", seq: 1, origin: "live", frame: frame(), sample: null }, 0);
    applyEvent(m, { type: "frame", seq: 2, origin: "live", frame: frame({ wrist_base: null }), sample: null }, 0);
    const ctx = new RecordingCtx();
    drawScene(ctx, m, ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx.strokes).toContain(COLORS.wristMissing);
    expect(ctx.fills).not.toContain(COLORS.wristInside);
  });

  it("replay frames carry a watermark, live frames do not", () => {
    const ctx = new RecordingCtx();
    drawScene(ctx, modelWithFrame(frame(), "replay"), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx.texts).toContain("REPLAY");
    const ctx2 = new RecordingCtx();
    drawScene(ctx2, modelWithFrame(frame(), "live"), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx2.texts).not.toContain("REPLAY");
  });

  it("consistency mismatch shows a badge unless warming up", () => {
    const ctx = new RecordingCtx();
    drawScene(ctx, modelWithFrame(frame({ recorded_flag: true, recomputed_flag: false, consistency: false })), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx.texts.some((t) => t.includes("MISMATCH"))).toBe(true);
    const ctx2 = new RecordingCtx();
    drawScene(ctx2, modelWithFrame(frame({ recorded_flag: true, recomputed_flag: false, consistency: false, warmup: true })), ZONE, DEFAULT_VIEWPORT, 0);
    expect(ctx2.texts.some((t) => t.includes("MISMATCH"))).toBe(false);
  });

  it("stale stream indicator appears after a silent second", () => {
    const m = modelWithFrame(frame());
    m.state = { ...freshState(), mode: "live_running" };
    m.lastFrameAt = 0;
    const ctx = new RecordingCtx();
    drawScene(ctx, m, ZONE, DEFAULT_VIEWPORT, 1500);
    expect(ctx.texts.some((t) => t.includes("STALE"))).toBe(true);
  });

  it("never crashes over random model states", () => {
    let seed = 1234567;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    const modes = ["idle", "live_running", "replaying"] as const;
    for (let i = 0; i < 500; i++) {
      const m = emptyModel();
      m.state = {
        ...freshState(),
        mode: modes[Math.floor(rand() * 3)],
        camera_on: rand() > 0.5,
        pose_on: rand() > 0.5,
        monitor_on: rand() > 0.5,
        recording: rand() > 0.5,
      };
      if (rand() > 0.3) {
        applyEvent(m, {
          type: "frame",
          seq: i,
          origin: rand() > 0.5 ? "live" : "replay",
          frame: frame({
            wrist_base: rand() > 0.3 ? [rand() * 2 - 0.5, rand() - 0.5, rand() * 0.5] : null,
            recorded_flag: rand() > 0.7 ? null : rand() > 0.5,
            recomputed_flag: rand() > 0.7 ? null : rand() > 0.5,
            warmup: rand() > 0.8,
          }),
          sample: null,
        }, i);
      }
      m.failsafe = rand() > 0.8;
      const ctx = new RecordingCtx();
      expect(() => drawScene(ctx, m, rand() > 0.2 ? ZONE : null, DEFAULT_VIEWPORT, i * 100)).not.toThrow();
    }
  });
});
