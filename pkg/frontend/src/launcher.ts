/** Container launch flow: create, request start, then poll every two
 * seconds until the server reports a terminal answer. */

import type { Container, HubClient } from "./api.js";

export const POLL_INTERVAL_MS = 2000;

export interface LaunchCallbacks {
  onState?: (container: Container) => void;
}

export async function launchContainer(
  client: HubClient,
  name: string,
  projectIds: string[],
  callbacks: LaunchCallbacks = {},
  timeoutMs = 120_000,
): Promise<Container> {
  const created = await client.createContainer(name, projectIds);
  callbacks.onState?.(created);
  await client.startContainer(created.container_id);
  return pollUntilSettled(client, created.container_id, callbacks, timeoutMs);
}

export function pollUntilSettled(
  client: HubClient,
  containerId: string,
  callbacks: LaunchCallbacks = {},
  timeoutMs = 120_000,
): Promise<Container> {
  return new Promise((resolve, reject) => {
    const deadline = Date.now() + timeoutMs;
    const tick = async () => {
      let container: Container;
      try {
        container = await client.getContainer(containerId);
      } catch (err) {
        reject(err);
        return;
      }
      callbacks.onState?.(container);
      if (container.state === "running" || container.state === "failed") {
        resolve(container);
      } else if (Date.now() >= deadline) {
        reject(new Error(`container ${containerId} did not settle`));
      } else {
        setTimeout(tick, POLL_INTERVAL_MS);
      }
    };
    setTimeout(tick, POLL_INTERVAL_MS);
  });
}
