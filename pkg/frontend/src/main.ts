/** Entry point: wires the API client, session storage, and render
 * functions to the page. */

import { HubApiError, HubClient } from "./api.js";
import { clearSession, loadSession, login, withSession } from "./auth.js";
import {
  renderContainerList,
  renderProjectList,
  renderReportList,
  renderUsage,
} from "./dashboard.js";
import { launchContainer } from "./launcher.js";

const client = new HubClient("");

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function showError(message: string): void {
  el("error").textContent = message;
}

async function refresh(): Promise<void> {
  const [projects, reports] = await Promise.all([
    client.listProjects(),
    client.listReports(),
  ]);
  el("projects").innerHTML = renderProjectList(projects);
  el("reports").innerHTML = renderReportList(reports);
  if (loadSession(localStorage)) {
    const [containers, usage] = await Promise.all([
      client.listContainers(),
      client.usage(),
    ]);
    el("containers").innerHTML = renderContainerList(containers);
    el("usage").innerHTML = renderUsage(usage);
  }
}

function setAuthedView(authed: boolean, username?: string): void {
  el("login-form").hidden = authed;
  el("workspace").hidden = !authed;
  el("whoami").textContent = authed && username ? username : "";
}

async function init(): Promise<void> {
  const session = loadSession(localStorage);
  if (session) {
    client.setToken(session.token);
    setAuthedView(true, session.username);
  } else {
    setAuthedView(false);
  }

  el("login-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const assertion = (el("assertion") as HTMLInputElement).value;
    try {
      const fresh = await login(client, localStorage, assertion);
      setAuthedView(true, fresh.username);
      await refresh();
    } catch (err) {
      showError(err instanceof HubApiError ? err.message : "login failed");
    }
  });

  el("logout").addEventListener("click", async () => {
    try {
      await client.logout();
    } finally {
      clearSession(localStorage);
      client.setToken(null);
      setAuthedView(false);
    }
  });

  el("launch-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const name = (el("container-name") as HTMLInputElement).value || "notebook";
    try {
      await withSession(client, localStorage, () =>
        launchContainer(client, name, [], {
          onState: () => void refresh().catch(() => undefined),
        }),
      );
    } catch (err) {
      showError(err instanceof Error ? err.message : "launch failed");
    }
  });

  el("projects").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.action === "join" && target.dataset.project) {
      await withSession(client, localStorage, () =>
        client.joinProject(target.dataset.project!),
      );
      await refresh();
    }
  });

  await refresh().catch(() => undefined);
}

document.addEventListener("DOMContentLoaded", () => void init());
