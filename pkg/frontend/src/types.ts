/** Wire types shared with the engine's HTTP API. */

export interface EngineEvent {
  at: number;
  kind:
    | "utterance"
    | "awaiting_response"
    | "nonverbal"
    | "queue_regenerated"
    | "session_end";
  payload: Record<string, unknown>;
}

export interface PendingQuestionSnapshot {
  interaction_id: string;
  text: string;
  options: string[];
  free_text: boolean;
}

export interface StateSnapshot {
  at: number;
  model: string;
  seed: number;
  main_distribution: Record<string, number>;
  histogram_text: string;
  queue: string[];
  variables: Record<string, number | null>;
  user_name: string | null;
  stats: unknown;
  pending_question: PendingQuestionSnapshot | null;
  ended: boolean;
}

export interface RespondResult {
  accepted: boolean;
  reason: string | null;
}
