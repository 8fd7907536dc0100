// Top-down 2D scene view: zone rectangle, robot links as segments between
// projected joint origins, wrist marker colored by the server's flag.
// Drawing goes through a small context interface so tests can record calls.

import type { ConsoleModel } from "./model.js";
import { isStale, wristStatus } from "./model.js";
import type { SceneFrame } from "./types.js";

export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

export interface Viewport {
  width: number;
  height: number;
  /** meters shown across the canvas width */
  spanM: number;
  /** base-frame point at the canvas center */
  centerX: number;
  centerY: number;
}

export const DEFAULT_VIEWPORT: Viewport = {
  width: 640,
  height: 480,
  spanM: 3.0,
  centerX: 0.5,
  centerY: 0.0,
};

// base frame: x right, y up on screen (top-down view)
export function toCanvas(vp: Viewport, x: number, y: number): [number, number] {
  const scale = vp.width / vp.spanM;
  return [vp.width / 2 + (x - vp.centerX) * scale, vp.height / 2 - (y - vp.centerY) * scale];
}

export const COLORS = {
  background: "#10151c",
  zone: "#e6c229",
  robot: "#7fb4ff",
  wristInside: "#ff4d4d",
  wristOutside: "#3ddc84",
  wristMissing: "#8a8f98",
  text: "#d7dce2",
  warn: "#ff9f1c",
};

export interface ZoneRect {
  min: [number, number];
  max: [number, number];
}

export function drawScene(
  ctx: Draw2D,
  model: ConsoleModel,
  zone: ZoneRect | null,
  vp: Viewport,
  nowMs: number,
): void {
  ctx.globalAlpha = 1;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, vp.width, vp.height);

  if (zone) {
    const [x0, y0] = toCanvas(vp, zone.min[0], zone.max[1]);
    const [x1, y1] = toCanvas(vp, zone.max[0], zone.min[1]);
    ctx.strokeStyle = COLORS.zone;
    ctx.lineWidth = 2;
    ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  }

  const frame = model.frame;
  if (frame) {
    drawRobot(ctx, frame, vp);
    drawWrist(ctx, model, frame, vp);
  }

  ctx.font = "14px system-ui, sans-serif";
  if (model.frameOrigin === "replay") {
    ctx.fillStyle = COLORS.text;
    ctx.globalAlpha = 0.6;
    ctx.fillText("REPLAY", 12, 22);
    ctx.globalAlpha = 1;
  }
  if (model.failsafe) {
    ctx.fillStyle = COLORS.warn;
    ctx.fillText("FAIL-SAFE: tracking lost", 12, vp.height - 34);
  }
  if (frame && frame.consistency === false && !frame.warmup) {
    ctx.fillStyle = COLORS.warn;
    ctx.fillText("FLAG MISMATCH: recorded vs recomputed", 12, vp.height - 16);
  }
  if (isStale(model, nowMs)) {
    ctx.fillStyle = COLORS.warn;
    ctx.fillText("STALE: no frames for over 1 s", 12, 40);
  }
}

function drawRobot(ctx: Draw2D, frame: SceneFrame, vp: Viewport): void {
  ctx.strokeStyle = COLORS.robot;
  ctx.lineWidth = 3;
  ctx.beginPath();
  const [bx, by] = toCanvas(vp, 0, 0);
  ctx.moveTo(bx, by);
  for (const pose of frame.link_poses) {
    const [x, y] = toCanvas(vp, pose.translation_m[0], pose.translation_m[1]);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

function drawWrist(ctx: Draw2D, model: ConsoleModel, frame: SceneFrame, vp: Viewport): void {
  const status = wristStatus(frame);
  if (status === "missing") {
    // gray ring at the last known spot, if any
    const last = [...model.frameRing].reverse().find((rf) => rf.frame.wrist_base !== null)?.frame;
    if (!last || last.wrist_base === null) return;
    const [x, y] = toCanvas(vp, last.wrist_base[0], last.wrist_base[1]);
    ctx.strokeStyle = COLORS.wristMissing;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(x, y, 8, 0, Math.PI * 2);
    ctx.stroke();
    return;
  }
  const wb = frame.wrist_base;
  if (wb === null) return;
  const [x, y] = toCanvas(vp, wb[0], wb[1]);
  ctx.fillStyle = status === "inside" ? COLORS.wristInside : COLORS.wristOutside;
  ctx.beginPath();
  ctx.arc(x, y, 8, 0, Math.PI * 2);
  ctx.fill();
}
