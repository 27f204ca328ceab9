/** DOM wiring: renders the chat view and debug panel, forwards clicks. */
import { getState, respond } from "./api.js";
import { applyLocalSubmission, expirePending, initialChatState, reduceEvent, secondsLeft, setConnection, } from "./chat.js";
import { buildDebugPanel } from "./debug.js";
import { streamEvents } from "./sse.js";
const BASE_URL = "";
let state = initialChatState();
let cueTimer;
let countdownTimer;
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function renderTranscript() {
    const container = el("transcript");
    container.innerHTML = "";
    for (const entry of state.transcript) {
        const row = document.createElement("div");
        row.className = `msg msg-${entry.who}`;
        const stamp = document.createElement("span");
        stamp.className = "stamp";
        stamp.textContent = `[${entry.at.toFixed(1)}s]`;
        const text = document.createElement("span");
        text.textContent = ` ${entry.text}`;
        row.append(stamp, text);
        container.appendChild(row);
    }
    container.scrollTop = container.scrollHeight;
}
function renderPending() {
    const box = el("answers");
    const countdown = el("countdown");
    box.innerHTML = "";
    if (!state.pending) {
        countdown.textContent = "";
        if (countdownTimer !== undefined)
            window.clearInterval(countdownTimer);
        countdownTimer = undefined;
        return;
    }
    for (const option of state.pending.options) {
        const button = document.createElement("button");
        button.textContent = option;
        button.onclick = () => submit({ label: option });
        box.appendChild(button);
    }
    const tick = () => {
        if (!state.pending)
            return;
        const left = secondsLeft(state.pending);
        countdown.textContent = `answer within ${left.toFixed(1)}s`;
        if (left <= 0) {
            state = expirePending(state);
            renderPending();
        }
    };
    tick();
    if (countdownTimer !== undefined)
        window.clearInterval(countdownTimer);
    countdownTimer = window.setInterval(tick, 200);
}
function renderCue() {
    const cue = el("cue");
    cue.textContent = state.cue ? `· ${state.cue} ·` : "";
    if (state.cue) {
        if (cueTimer !== undefined)
            window.clearTimeout(cueTimer);
        cueTimer = window.setTimeout(() => {
            state = { ...state, cue: null };
            renderCue();
        }, 2500);
    }
}
function renderConnection() {
    const badge = el("connection");
    badge.textContent = state.connection;
    badge.className = `badge badge-${state.connection}`;
}
async function refreshDebug() {
    try {
        const snapshot = await getState(BASE_URL);
        const panel = buildDebugPanel(snapshot);
        el("histogram").textContent = panel.histogram.join("\n");
        const queue = el("queue");
        queue.innerHTML = "";
        if (panel.depleted) {
            const item = document.createElement("li");
            item.textContent = "(depleted)";
            queue.appendChild(item);
        }
        else {
            for (const line of panel.queue) {
                const item = document.createElement("li");
                item.textContent = line.replace(/^\d+\.\s*/, "");
                queue.appendChild(item);
            }
        }
        const variables = el("variables");
        variables.innerHTML = "";
        for (const [name, value] of panel.variables) {
            const row = document.createElement("tr");
            const nameCell = document.createElement("td");
            nameCell.textContent = name;
            const valueCell = document.createElement("td");
            valueCell.textContent = value === null ? "unset" : value.toFixed(2);
            row.append(nameCell, valueCell);
            variables.appendChild(row);
        }
    }
    catch {
        // engine briefly unreachable; the connection badge already says so
    }
}
async function submit(answer) {
    const text = answer.label ?? answer.freeText ?? "";
    const result = await respond(BASE_URL, answer);
    if (result.accepted) {
        state = applyLocalSubmission(state, text);
    }
    else {
        state = {
            ...state,
            transcript: [
                ...state.transcript,
                { who: "system", text: `(rejected: ${result.reason})`, at: 0 },
            ],
        };
    }
    renderTranscript();
    renderPending();
    void refreshDebug();
}
function wireFreeText() {
    const input = el("free-text");
    const send = el("send");
    const go = () => {
        if (input.value.trim()) {
            void submit({ freeText: input.value.trim() });
            input.value = "";
        }
    };
    send.onclick = go;
    input.onkeydown = (event) => {
        if (event.key === "Enter")
            go();
    };
}
function start() {
    wireFreeText();
    void refreshDebug();
    streamEvents(BASE_URL, {
        onEvent: (event) => {
            state = reduceEvent(state, event);
            renderTranscript();
            renderPending();
            renderCue();
            void refreshDebug();
        },
        onStatus: (status) => {
            state = setConnection(state, status);
            renderConnection();
        },
    });
}
start();
