/**
 * End-to-end round trip against a real engine process: start the Python
 * server with the fast test model, answer "Great" through the client API,
 * and verify both the variable change and that our debug-panel rendering is
 * byte-identical to the engine's own histogram text.
 */
import assert from "node:assert/strict";
import { spawn, spawnSync } from "node:child_process";
import { existsSync } from "node:fs";
import { dirname, join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";
import { getState, respond } from "../src/api.js";
import { buildDebugPanel, matchesEngineRendering } from "../src/debug.js";
import { initialChatState, reduceEvent } from "../src/chat.js";
import { streamEvents } from "../src/sse.js";
const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..", "..");
const modelPath = join(repoRoot, "src", "korra", "data", "uitest.json");
function pythonAvailable() {
    return spawnSync("python3", ["-c", "import korra"], { cwd: repoRoot }).status === 0;
}
async function waitForPort(child) {
    return new Promise((resolve, reject) => {
        let output = "";
        const timer = setTimeout(() => reject(new Error(`server never reported a port: ${output}`)), 15000);
        child.stdout.on("data", (chunk) => {
            output += chunk.toString();
            const match = output.match(/serving on http:\/\/127\.0\.0\.1:(\d+)/);
            if (match) {
                clearTimeout(timer);
                resolve(Number(match[1]));
            }
        });
        child.on("exit", (code) => {
            clearTimeout(timer);
            reject(new Error(`server exited early (${code}): ${output}`));
        });
    });
}
async function poll(fn, timeoutMs) {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        const value = await fn();
        if (value !== null)
            return value;
        await new Promise((resolve) => setTimeout(resolve, 30));
    }
    throw new Error("timed out waiting for condition");
}
test("end-to-end: Great drives the mood variable to 0.9 and panels match", { timeout: 60000 }, async (t) => {
    if (!pythonAvailable() || !existsSync(modelPath)) {
        t.skip("python engine not importable here");
        return;
    }
    const child = spawn("python3", ["-m", "korra.cli", "run", "--model", modelPath, "--seed", "7", "--serve", "0"], { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] });
    try {
        const port = await waitForPort(child);
        const base = `http://127.0.0.1:${port}`;
        // live chat view fed by the real event stream
        let chat = initialChatState();
        const events = [];
        const stream = streamEvents(base, {
            onEvent: (event) => {
                events.push(event);
                chat = reduceEvent(chat, event);
            },
        });
        const pending = await poll(async () => {
            const snapshot = await getState(base);
            return snapshot.pending_question ? snapshot : null;
        }, 20000);
        assert.deepEqual(pending.pending_question.options, ["Not so well", "Fine", "Great"]);
        const result = await respond(base, { label: "Great" });
        assert.equal(result.accepted, true);
        const after = await poll(async () => {
            const snapshot = await getState(base);
            return snapshot.variables.InAGoodMood === 0.9 ? snapshot : null;
        }, 10000);
        assert.equal(after.variables.InAGoodMood, 0.9);
        // debug panel renders exactly what the engine renders
        assert.ok(matchesEngineRendering(after), "local histogram must equal engine text");
        const panel = buildDebugPanel(after);
        assert.equal(panel.histogram.join("\n"), after.histogram_text);
        assert.ok(panel.queue.every((line, i) => line.startsWith(`${i + 1}. `)));
        // a second click on the consumed question is stale
        const stale = await respond(base, { label: "Great" });
        assert.equal(stale.accepted, false);
        // the stream carried real engine events into the chat view
        await poll(async () => (events.length >= 3 ? events : null), 10000);
        assert.ok(events.some((event) => event.kind === "utterance"));
        assert.ok(chat.transcript.length >= 1);
        stream.close();
    }
    finally {
        child.kill("SIGKILL");
    }
});
