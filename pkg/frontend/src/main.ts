// Console wiring: DOM events -> API calls, telemetry events -> model ->
// render. All safety semantics live server-side; this file only mirrors.

import { ApiClient, ApiFailure } from "./api.js";
import { buttonEnabled, type ButtonId } from "./gating.js";
import { applyEvent, emptyModel, type ConsoleModel } from "./model.js";
import { DEFAULT_VIEWPORT, drawScene, type ZoneRect } from "./scene.js";
import { subscribeTelemetry } from "./stream.js";
import {
  cursorFraction,
  hoverInfo,
  periodBands,
  seekTargetFromFraction,
  SPEED_CHOICES,
} from "./timeline.js";
import type { SessionInfo } from "./types.js";

const api = new ApiClient("");
const model: ConsoleModel = emptyModel();
let zone: ZoneRect | null = null;
let sessions: SessionInfo[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scene");
const sceneCtx = canvas.getContext("2d");
if (!sceneCtx) throw new Error("2D context unavailable");

const modeLabel = el<HTMLSpanElement>("mode-label");
const connLabel = el<HTMLSpanElement>("conn-label");
const recordSlider = el<HTMLInputElement>("record-slider");
const recordLabel = el<HTMLSpanElement>("record-label");
const sessionSelect = el<HTMLSelectElement>("session-select");
const replayPanel = el<HTMLDivElement>("replay-panel");
const scrub = el<HTMLInputElement>("scrub");
const bands = el<HTMLCanvasElement>("bands");
const timeLabel = el<HTMLSpanElement>("time-label");
const speedSelect = el<HTMLSelectElement>("speed-select");
const hoverTip = el<HTMLDivElement>("hover-tip");
const logList = el<HTMLUListElement>("event-log");
const toasts = el<HTMLDivElement>("toasts");

const BUTTONS: [ButtonId, string, () => Promise<unknown>][] = [
  ["start_running", "btn-start-running", () => api.startRun()],
  ["stop_running", "btn-stop-running", () => api.stopRun()],
  ["start_fsm", "btn-start-fsm", () => api.startFsm()],
  ["stop_fsm", "btn-stop-fsm", () => api.stopFsm()],
  ["start_camera", "btn-start-camera", () => api.startCamera()],
  ["start_pose_estimate", "btn-start-pose", () => api.startPoseEstimate()],
  ["start_safety_monitoring", "btn-start-monitor", () => api.startSafetyMonitoring()],
  ["replay_open", "btn-replay", () => openReplay()],
  ["replay_play", "btn-play", () => api.replayControl("play")],
  ["replay_pause", "btn-pause", () => api.replayControl("pause")],
  ["replay_close", "btn-close-replay", () => api.replayClose()],
];

function toast(message: string): void {
  const div = document.createElement("div");
  div.className = "toast";
  div.textContent = message;
  div.onclick = () => div.remove();
  toasts.appendChild(div);
  setTimeout(() => div.remove(), 6000);
}

async function call(fn: () => Promise<unknown>): Promise<void> {
  try {
    await fn();
  } catch (err) {
    if (err instanceof ApiFailure) {
      toast(`${err.kind}: ${err.detail}`);
    } else {
      toast(String(err));
    }
  }
  await resync();
}

async function openReplay(): Promise<unknown> {
  const chosen = sessionSelect.value;
  return chosen ? api.replayOpen(chosen) : api.replayOpen();
}

async function resync(): Promise<void> {
  try {
    model.state = await api.getState();
  } catch {
    // stream reconnect will resync later
  }
  renderControls();
}

async function refreshSessions(): Promise<void> {
  try {
    sessions = await api.listSessions();
  } catch {
    sessions = [];
  }
  sessionSelect.innerHTML = "";
  const auto = document.createElement("option");
  auto.value = "";
  auto.textContent = sessions.length ? `latest: ${sessions[0].name}` : "latest recording";
  sessionSelect.appendChild(auto);
  for (const s of sessions) {
    const opt = document.createElement("option");
    opt.value = s.path;
    opt.textContent = s.error ? `${s.name} (unreadable)` : `${s.name} (${s.duration_s?.toFixed(1)}s)`;
    sessionSelect.appendChild(opt);
  }
}

function renderControls(): void {
  const s = model.state;
  modeLabel.textContent = s.mode;
  connLabel.textContent = model.connected ? "connected" : "disconnected";
  connLabel.className = model.connected ? "ok" : "bad";

  for (const [id, domId] of BUTTONS) {
    el<HTMLButtonElement>(domId).disabled = !buttonEnabled(id, s);
  }
  recordSlider.disabled = !buttonEnabled("record", s);
  recordSlider.checked = s.recording;
  recordLabel.textContent = s.recording ? `recording: ${s.active_session_path ?? ""}` : "record";

  replayPanel.classList.toggle("hidden", s.replay === null);
  if (s.replay) {
    scrub.value = String(Math.round(cursorFraction(s.replay) * 1000));
    timeLabel.textContent = `${s.replay.position_t.toFixed(2)} / ${s.replay.duration_s.toFixed(2)} s  (${s.replay.speed}x)`;
    speedSelect.value = String(s.replay.speed);
    drawBands(s.replay.duration_s);
  }
}

function drawBands(durationS: number): void {
  const ctx = bands.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, bands.width, bands.height);
  const current = sessions.find((s) => s.path === model.state.replay?.path);
  const periods = current?.periods ?? model.periods;
  ctx.fillStyle = "#b3243a";
  for (const band of periodBands(periods, durationS)) {
    ctx.fillRect(band.start * bands.width, 0, Math.max(2, (band.end - band.start) * bands.width), bands.height);
  }
}

function renderLog(): void {
  logList.innerHTML = "";
  for (const entry of model.log.slice(-12).reverse()) {
    const li = document.createElement("li");
    li.textContent = entry.text;
    logList.appendChild(li);
  }
}

// controls -> API
for (const [, domId, fn] of BUTTONS) {
  el<HTMLButtonElement>(domId).onclick = () => void call(fn);
}
recordSlider.onchange = () => void call(() => api.setRecording(recordSlider.checked));
scrub.oninput = () => {
  const replay = model.state.replay;
  if (!replay) return;
  const t = seekTargetFromFraction(Number(scrub.value) / 1000, replay.duration_s);
  void call(() => api.replayControl("seek", t));
};
for (const s of SPEED_CHOICES) {
  const opt = document.createElement("option");
  opt.value = String(s);
  opt.textContent = `${s}x`;
  speedSelect.appendChild(opt);
}
speedSelect.value = "1";
speedSelect.onchange = () => void call(() => api.replayControl("speed", Number(speedSelect.value)));
scrub.onmousemove = (ev) => {
  const replay = model.state.replay;
  if (!replay) return;
  const rect = scrub.getBoundingClientRect();
  const t = seekTargetFromFraction((ev.clientX - rect.left) / rect.width, replay.duration_s);
  hoverTip.classList.remove("hidden");
  hoverTip.style.left = `${ev.clientX}px`;
  hoverTip.innerHTML = hoverInfo(model, t)
    .map((line) => `<div>${line}</div>`)
    .join("");
};
scrub.onmouseleave = () => hoverTip.classList.add("hidden");

// telemetry -> model
subscribeTelemetry(
  "",
  (ev) => {
    applyEvent(model, ev, performance.now());
    if (ev.type === "state_changed") {
      renderControls();
      void refreshSessions();
    }
    renderLog();
  },
  () => {
    model.connected = true;
    void resync();
    void refreshSessions();
  },
  () => {
    model.connected = false;
    renderControls();
  },
);

// boot: fetch static geometry, then render forever
void (async () => {
  try {
    const scene = await fetch("/api/scene").then((r) => r.json());
    zone = { min: [scene.zone.min_m[0], scene.zone.min_m[1]], max: [scene.zone.max_m[0], scene.zone.max_m[1]] };
  } catch {
    zone = null;
  }
  await resync();
  await refreshSessions();
  const loop = () => {
    drawScene(sceneCtx, model, zone, DEFAULT_VIEWPORT, performance.now());
    requestAnimationFrame(loop);
  };
  loop();
})();
