// Thin typed client over the documented endpoints. Every call either
// resolves with the server's JSON or rejects with ApiFailure carrying the
// typed error name from the body.

import type { SessionInfo, SystemState } from "./types.js";

export class ApiFailure extends Error {
  constructor(
    public readonly kind: string,
    public readonly detail: string,
    public readonly status: number,
  ) {
    super(`${kind}: ${detail}`);
  }
}

async function request<T>(base: string, method: string, path: string, body?: unknown): Promise<T> {
  const res = await fetch(base + path, {
    method,
    headers: body === undefined ? undefined : { "content-type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const data = await res.json().catch(() => ({}));
  if (!res.ok) {
    const kind = typeof data.error === "string" ? data.error : `HTTP${res.status}`;
    const detail = typeof data.detail === "string" ? data.detail : res.statusText;
    throw new ApiFailure(kind, detail, res.status);
  }
  return data as T;
}

export interface Ack {
  ok: boolean;
  noop: boolean;
  state: SystemState;
  path?: string;
  samples?: number;
  duration_s?: number;
  cursor?: number;
  position_t?: number;
  speed?: number;
}

export class ApiClient {
  constructor(public readonly base: string = "") {}

  getState(): Promise<SystemState> {
    return request(this.base, "GET", "/api/state");
  }

  listSessions(): Promise<SessionInfo[]> {
    return request(this.base, "GET", "/api/sessions");
  }

  startRun(): Promise<Ack> {
    return request(this.base, "POST", "/api/run/start");
  }

  stopRun(): Promise<Ack> {
    return request(this.base, "POST", "/api/run/stop");
  }

  startFsm(): Promise<Ack> {
    return request(this.base, "POST", "/api/fsm/start");
  }

  stopFsm(): Promise<Ack> {
    return request(this.base, "POST", "/api/fsm/stop");
  }

  startCamera(): Promise<Ack> {
    return request(this.base, "POST", "/api/camera/start");
  }

  startPoseEstimate(): Promise<Ack> {
    return request(this.base, "POST", "/api/pose/start");
  }

  startSafetyMonitoring(): Promise<Ack> {
    return request(this.base, "POST", "/api/monitor/start");
  }

  setRecording(on: boolean): Promise<Ack> {
    return request(this.base, "POST", "/api/record", { on });
  }

  replayOpen(path?: string): Promise<Ack> {
    return request(this.base, "POST", "/api/replay/open", path ? { path } : {});
  }

  replayControl(action: "play" | "pause" | "seek" | "speed", value?: number): Promise<Ack> {
    return request(this.base, "POST", "/api/replay/control", { action, value });
  }

  replayClose(): Promise<Ack> {
    return request(this.base, "POST", "/api/replay/close");
  }
}
