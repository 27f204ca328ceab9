/**
 * Server-sent-events client over fetch streams. Works identically in the
 * browser and in node (for the end-to-end test), and reconnects with a
 * visible status change while preserving all state accumulated so far.
 */

import type { EngineEvent } from "./types.js";

export interface StreamHandlers {
  onEvent: (event: EngineEvent) => void;
  onStatus?: (status: "connecting" | "live" | "reconnecting") => void;
}

export interface StreamController {
  close: () => void;
}

const RETRY_MS = 2000;

export function streamEvents(baseUrl: string, handlers: StreamHandlers): StreamController {
  let closed = false;
  const abort = { controller: new AbortController() };

  const connect = async (): Promise<void> => {
    while (!closed) {
      handlers.onStatus?.("connecting");
      try {
        abort.controller = new AbortController();
        const response = await fetch(`${baseUrl}/api/events`, {
          signal: abort.controller.signal,
          headers: { Accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) {
          throw new Error(`event stream returned ${response.status}`);
        }
        handlers.onStatus?.("live");
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let cut;
          while ((cut = buffer.indexOf("\n\n")) >= 0) {
            const chunk = buffer.slice(0, cut);
            buffer = buffer.slice(cut + 2);
            for (const line of chunk.split("\n")) {
              if (line.startsWith("data: ")) {
                try {
                  handlers.onEvent(JSON.parse(line.slice(6)) as EngineEvent);
                } catch {
                  // malformed frame: skip rather than kill the stream
                }
              }
            }
          }
        }
      } catch {
        // fall through to the retry path
      }
      if (closed) return;
      handlers.onStatus?.("reconnecting");
      await new Promise((resolve) => setTimeout(resolve, RETRY_MS));
    }
  };

  void connect();
  return {
    close: () => {
      closed = true;
      abort.controller.abort();
    },
  };
}
