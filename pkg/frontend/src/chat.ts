/**
 * Pure chat-view state: an append-only transcript, at most one pending
 * question, and the current nonverbal cue. All mutation happens by reducing
 * engine events or local user actions; the DOM layer only renders the result.
 */

import type { EngineEvent, PendingQuestionSnapshot } from "./types.js";

export type ConnectionStatus = "connecting" | "live" | "reconnecting";

export interface TranscriptEntry {
  who: "agent" | "user" | "system";
  text: string;
  at: number;
}

export interface PendingQuestion {
  interactionId: string;
  options: string[];
  freeText: boolean;
  timeoutS: number;
  deadlineAt: number; // engine-time deadline (at + timeout)
  askedWall: number; // wall-clock ms when the question opened, for countdowns
}

export interface ChatState {
  transcript: TranscriptEntry[];
  pending: PendingQuestion | null;
  cue: string | null;
  connection: ConnectionStatus;
  ended: boolean;
}

export function initialChatState(): ChatState {
  return {
    transcript: [],
    pending: null,
    cue: null,
    connection: "connecting",
    ended: false,
  };
}

/** Fold one engine event into the view state (never mutates the input). */
export function reduceEvent(
  state: ChatState,
  event: EngineEvent,
  nowWall: number = Date.now(),
): ChatState {
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
        ? (event.payload.options as string[])
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
export function applyLocalSubmission(state: ChatState, text: string): ChatState {
  if (!state.pending) return state;
  return {
    ...state,
    pending: null,
    transcript: [...state.transcript, { who: "user", text, at: state.pending.deadlineAt }],
  };
}

/** Countdown expiry observed locally; the engine moves on by itself. */
export function expirePending(state: ChatState): ChatState {
  if (!state.pending) return state;
  return { ...state, pending: null };
}

export function setConnection(state: ChatState, connection: ConnectionStatus): ChatState {
  if (state.connection === connection) return state;
  return { ...state, connection };
}

export function secondsLeft(pending: PendingQuestion, nowWall: number = Date.now()): number {
  const elapsed = (nowWall - pending.askedWall) / 1000;
  return Math.max(0, pending.timeoutS - elapsed);
}
