/** Wire types shared with the engine's HTTP API. */
export {};
