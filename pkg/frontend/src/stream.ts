// NDJSON telemetry reader over fetch streaming, with reconnection.
// The line splitter is factored out so chunk-boundary handling is testable.

import type { TelemetryEvent } from "./types.js";

export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((l) => l.length > 0);
  }

  flush(): string[] {
    const rest = this.buffer;
    this.buffer = "";
    return rest.length > 0 ? [rest] : [];
  }
}

export function parseEventLine(line: string): TelemetryEvent | null {
  try {
    const data = JSON.parse(line);
    if (data && typeof data.type === "string") return data as TelemetryEvent;
  } catch {
    // tolerate a torn line; the stream resyncs on the next event
  }
  return null;
}

export interface StreamHandle {
  stop(): void;
}

/**
 * Subscribe to /api/telemetry and push events to onEvent. Reconnects with
 * a fixed backoff until stop() is called; onConnect/onDisconnect drive the
 * connection indicator.
 */
export function subscribeTelemetry(
  base: string,
  onEvent: (ev: TelemetryEvent) => void,
  onConnect: () => void,
  onDisconnect: () => void,
  backoffMs = 1000,
): StreamHandle {
  let stopped = false;
  let controller: AbortController | null = null;

  async function run(): Promise<void> {
    while (!stopped) {
      controller = new AbortController();
      try {
        const res = await fetch(`${base}/api/telemetry`, { signal: controller.signal });
        if (!res.ok || !res.body) throw new Error(`telemetry HTTP ${res.status}`);
        onConnect();
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        const splitter = new LineSplitter();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const line of splitter.push(decoder.decode(value, { stream: true }))) {
            const ev = parseEventLine(line);
            if (ev) onEvent(ev);
          }
        }
      } catch {
        // fall through to reconnect
      }
      onDisconnect();
      if (!stopped) {
        await new Promise((r) => setTimeout(r, backoffMs));
      }
    }
  }

  void run();
  return {
    stop() {
      stopped = true;
      controller?.abort();
    },
  };
}
