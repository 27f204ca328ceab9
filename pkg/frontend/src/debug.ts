/**
 * Debug panel: a pure projection of a state snapshot into the exact strings
 * the engine itself renders, so what the panel shows is what the log says.
 */

import { histogramLines } from "./format.js";
import type { StateSnapshot } from "./types.js";

export interface DebugPanel {
  histogram: string[];
  queue: string[];
  variables: [string, number | null][];
  depleted: boolean;
}

export function buildDebugPanel(snapshot: StateSnapshot): DebugPanel {
  return {
    histogram: histogramLines(snapshot.main_distribution),
    queue: snapshot.queue,
    variables: Object.entries(snapshot.variables),
    depleted: snapshot.queue.length === 0,
  };
}

/** True when our local rendering agrees with the engine's own text. */
export function matchesEngineRendering(snapshot: StateSnapshot): boolean {
  const local = histogramLines(snapshot.main_distribution).join("\n");
  return local === snapshot.histogram_text;
}
