/** Session persistence for the browser. The server is the authority on
 * session validity; this module only remembers the bearer token. */

import { HubApiError, HubClient } from "./api.js";

const STORAGE_KEY = "hub-session";

export interface StoredSession {
  token: string;
  username: string;
}

export function loadSession(storage: Storage): StoredSession | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    return JSON.parse(raw) as StoredSession;
  } catch {
    storage.removeItem(STORAGE_KEY);
    return null;
  }
}

export function saveSession(storage: Storage, session: StoredSession): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(session));
}

export function clearSession(storage: Storage): void {
  storage.removeItem(STORAGE_KEY);
}

export async function login(
  client: HubClient,
  storage: Storage,
  assertion: string,
): Promise<StoredSession> {
  const result = await client.login(assertion);
  const session = { token: result.token, username: result.username };
  client.setToken(session.token);
  saveSession(storage, session);
  return session;
}

/** Run an API call; if the server says the session is gone, drop the
 * stored token so the UI falls back to the login view. */
export async function withSession<T>(
  client: HubClient,
  storage: Storage,
  action: () => Promise<T>,
): Promise<T> {
  try {
    return await action();
  } catch (err) {
    if (err instanceof HubApiError && err.status === 401) {
      clearSession(storage);
      client.setToken(null);
    }
    throw err;
  }
}
