/** Typed client for the hub JSON API. All decisions about what a user
 * may see or do are made server-side; this client only relays them. */

export interface Project {
  project_id: string;
  name: string;
  scope: string;
  members: Record<string, string>;
  image_ref: string | null;
  is_member?: boolean;
  joinable?: boolean;
}

export interface Container {
  container_id: string;
  name: string;
  state: string;
  url: string | null;
  upstream_address?: string | null;
}

export interface Report {
  report_id: string;
  name: string;
  version: number;
  scope: string;
  kind: string;
  project_id: string;
  password_protected: boolean;
  app_route?: string | null;
}

export interface UsageSample {
  container_id: string;
  cpu_fraction: number;
  memory_bytes: number;
}

export interface ApiError {
  error: string;
  detail?: string;
}

export class HubApiError extends Error {
  constructor(public status: number, public code: string, detail?: string) {
    super(detail ?? code);
  }
}

export class HubClient {
  constructor(private base = "", private token: string | null = null) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json();
    if (!resp.ok) {
      const err = payload as ApiError;
      throw new HubApiError(resp.status, err.error ?? "unknown", err.detail);
    }
    return payload as T;
  }

  login(assertion: string): Promise<{ token: string; username: string }> {
    return this.request("POST", "/auth/login", { assertion });
  }

  logout(): Promise<void> {
    return this.request("POST", "/auth/logout");
  }

  listProjects(): Promise<Project[]> {
    return this.request("GET", "/projects");
  }

  createProject(name: string, scope = "private"): Promise<Project> {
    return this.request("POST", "/projects", { name, scope });
  }

  joinProject(projectId: string): Promise<Project> {
    return this.request("POST", `/projects/${projectId}/join`);
  }

  listContainers(): Promise<Container[]> {
    return this.request("GET", "/containers");
  }

  createContainer(name: string, projectIds: string[] = []): Promise<Container> {
    return this.request("POST", "/containers", { name, project_ids: projectIds });
  }

  startContainer(containerId: string): Promise<Container> {
    return this.request("POST", `/containers/${containerId}/start`);
  }

  stopContainer(containerId: string): Promise<Container> {
    return this.request("POST", `/containers/${containerId}/stop`);
  }

  getContainer(containerId: string): Promise<Container> {
    return this.request("GET", `/containers/${containerId}`);
  }

  usage(): Promise<UsageSample[]> {
    return this.request("GET", "/usage");
  }

  listReports(): Promise<Report[]> {
    return this.request("GET", "/reports");
  }

  publishReport(
    projectId: string,
    name: string,
    files: Record<string, string>,
    scope = "private",
  ): Promise<Report> {
    return this.request("POST", "/reports", {
      project_id: projectId,
      name,
      files,
      scope,
    });
  }
}
