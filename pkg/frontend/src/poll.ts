/**
 * Single poll loop per session: fetch the pending conflict, hand it to the
 * handler (which resolves when the service accepted a fix), repeat until
 * the session reports done. SessionNotFound propagates to the caller.
 */

import { ApiClient, ConflictPayload } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  sleep?: (ms: number) => Promise<void>;
  onIdle?: () => void;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export async function runSession(
  api: ApiClient,
  sessionId: string,
  onConflict: (payload: ConflictPayload) => Promise<void>,
  options: PollOptions = {},
): Promise<void> {
  const interval = options.intervalMs ?? 500;
  const sleep = options.sleep ?? defaultSleep;
  for (;;) {
    const state = await api.sessionState(sessionId);
    if (state.state === "done") return;
    const pending = await api.pending(sessionId);
    if (pending !== null) {
      await onConflict(pending);
      continue;
    }
    options.onIdle?.();
    await sleep(interval);
  }
}
