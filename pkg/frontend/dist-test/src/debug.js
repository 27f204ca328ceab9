/**
 * Debug panel: a pure projection of a state snapshot into the exact strings
 * the engine itself renders, so what the panel shows is what the log says.
 */
import { histogramLines } from "./format.js";
export function buildDebugPanel(snapshot) {
    return {
        histogram: histogramLines(snapshot.main_distribution),
        queue: snapshot.queue,
        variables: Object.entries(snapshot.variables),
        depleted: snapshot.queue.length === 0,
    };
}
/** True when our local rendering agrees with the engine's own text. */
export function matchesEngineRendering(snapshot) {
    const local = histogramLines(snapshot.main_distribution).join("\n");
    return local === snapshot.histogram_text;
}
