/** Thin fetch wrappers for the engine's HTTP API. */

import type { RespondResult, StateSnapshot } from "./types.js";

export async function getState(baseUrl: string): Promise<StateSnapshot> {
  const response = await fetch(`${baseUrl}/api/state`);
  if (!response.ok) {
    throw new Error(`GET /api/state failed: ${response.status}`);
  }
  return (await response.json()) as StateSnapshot;
}

export async function respond(
  baseUrl: string,
  answer: { label?: string; freeText?: string },
): Promise<RespondResult> {
  const body = answer.label !== undefined
    ? { response_label: answer.label }
    : { free_text: answer.freeText ?? "" };
  const response = await fetch(`${baseUrl}/api/respond`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (response.status === 400) {
    return (await response.json()) as RespondResult;
  }
  if (!response.ok) {
    throw new Error(`POST /api/respond failed: ${response.status}`);
  }
  return (await response.json()) as RespondResult;
}
