/**
 * Pure chat-view state: an append-only transcript, at most one pending
 * question, and the current nonverbal cue. All mutation happens by reducing
 * engine events or local user actions; the DOM layer only renders the result.
 */
export function initialChatState() {
    return {
        transcript: [],
        pending: null,
        cue: null,
        connection: "connecting",
        ended: false,
    };
}
/** Fold one engine event into the view state (never mutates the input). */
export function reduceEvent(state, event, nowWall = Date.now()) {
    switch (event.kind) {
        case "utterance": {
            const text = String(event.payload.text ?? "");
            return {
                ...state,
                // a new utterance always supersedes any open question
                pending: null,
                transcript: [...state.transcript, { who: "agent", text, at: event.at }],
            };
        }
        case "awaiting_response": {
            const options = Array.isArray(event.payload.options)
                ? event.payload.options
                : [];
            const timeoutS = Number(event.payload.timeout_s ?? 0);
            return {
                ...state,
                pending: {
                    interactionId: String(event.payload.interaction_id ?? ""),
                    options,
                    freeText: Boolean(event.payload.free_text),
                    timeoutS,
                    deadlineAt: event.at + timeoutS,
                    askedWall: nowWall,
                },
            };
        }
        case "nonverbal":
            return { ...state, cue: String(event.payload.cue ?? "") };
        case "session_end":
            return { ...state, pending: null, ended: true };
        case "queue_regenerated":
            return state;
        default:
            return state;
    }
}
/** Optimistic local submission: close the buttons and echo the user's answer. */
export function applyLocalSubmission(state, text) {
    if (!state.pending)
        return state;
    return {
        ...state,
        pending: null,
        transcript: [...state.transcript, { who: "user", text, at: state.pending.deadlineAt }],
    };
}
/** Countdown expiry observed locally; the engine moves on by itself. */
export function expirePending(state) {
    if (!state.pending)
        return state;
    return { ...state, pending: null };
}
export function setConnection(state, connection) {
    if (state.connection === connection)
        return state;
    return { ...state, connection };
}
export function secondsLeft(pending, nowWall = Date.now()) {
    const elapsed = (nowWall - pending.askedWall) / 1000;
    return Math.max(0, pending.timeoutS - elapsed);
}
