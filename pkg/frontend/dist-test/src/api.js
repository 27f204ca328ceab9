/** Thin fetch wrappers for the engine's HTTP API. */
export async function getState(baseUrl) {
    const response = await fetch(`${baseUrl}/api/state`);
    if (!response.ok) {
        throw new Error(`GET /api/state failed: ${response.status}`);
    }
    return (await response.json());
}
export async function respond(baseUrl, answer) {
    const body = answer.label !== undefined
        ? { response_label: answer.label }
        : { free_text: answer.freeText ?? "" };
    const response = await fetch(`${baseUrl}/api/respond`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
    });
    if (response.status === 400) {
        return (await response.json());
    }
    if (!response.ok) {
        throw new Error(`POST /api/respond failed: ${response.status}`);
    }
    return (await response.json());
}
