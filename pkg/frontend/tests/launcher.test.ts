import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { HubClient, type Container } from "../src/api.js";
import { POLL_INTERVAL_MS, launchContainer } from "../src/launcher.js";

function fakeClient(states: string[]) {
  let polls = 0;
  const container = (state: string): Container => ({
    container_id: "c-1",
    name: "nb",
    state,
    url: state === "running" ? "/notebook/c-1/" : null,
  });
  const client = {
    createContainer: vi.fn(async () => container("created")),
    startContainer: vi.fn(async () => container("starting")),
    getContainer: vi.fn(async () => {
      const state = states[Math.min(polls, states.length - 1)];
      polls += 1;
      return container(state);
    }),
  };
  return client as unknown as HubClient & typeof client;
}

describe("launchContainer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("creates, starts, then polls every 2 s until running", async () => {
    const client = fakeClient(["starting", "starting", "running"]);
    const seen: string[] = [];
    const promise = launchContainer(client, "nb", ["p-1"], {
      onState: (c) => seen.push(c.state),
    });

    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 3);
    const result = await promise;

    expect(client.createContainer).toHaveBeenCalledWith("nb", ["p-1"]);
    expect(client.startContainer).toHaveBeenCalledWith("c-1");
    expect(client.getContainer).toHaveBeenCalledTimes(3);
    expect(result.state).toBe("running");
    expect(result.url).toBe("/notebook/c-1/");
    expect(seen).toEqual(["created", "starting", "starting", "running"]);
  });

  it("does not poll before the first interval elapses", async () => {
    const client = fakeClient(["running"]);
    void launchContainer(client, "nb", []);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS - 1);
    expect(client.getContainer).not.toHaveBeenCalled();
    await vi.advanceTimersByTimeAsync(1);
    expect(client.getContainer).toHaveBeenCalledTimes(1);
  });

  it("settles on failed state without further polling", async () => {
    const client = fakeClient(["failed"]);
    const promise = launchContainer(client, "nb", []);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 2);
    const result = await promise;
    expect(result.state).toBe("failed");
    expect(client.getContainer).toHaveBeenCalledTimes(1);
  });

  it("rejects when the deadline passes while still starting", async () => {
    const client = fakeClient(["starting"]);
    const promise = launchContainer(client, "nb", [], {}, POLL_INTERVAL_MS * 2);
    const outcome = promise.catch((err: Error) => err.message);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 4);
    expect(await outcome).toContain("did not settle");
  });
});
