/** Render functions producing HTML strings from API payloads.
 *
 * The dashboard renders exactly what the server returned: listings are
 * already filtered by scope on the server, so there is no visibility
 * logic here to get wrong. */

import type { Container, Project, Report, UsageSample } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderProjectList(projects: Project[]): string {
  if (projects.length === 0) {
    return '<p class="empty">No projects visible.</p>';
  }
  const rows = projects.map((p) => {
    const badges: string[] = [escapeHtml(p.scope)];
    if (p.is_member) badges.push("member");
    const join = p.joinable && !p.is_member
      ? `<button data-action="join" data-project="${escapeHtml(p.project_id)}">join</button>`
      : "";
    return (
      `<li class="project" data-id="${escapeHtml(p.project_id)}">` +
      `<span class="name">${escapeHtml(p.name)}</span>` +
      `<span class="badges">${badges.join(" ")}</span>${join}</li>`
    );
  });
  return `<ul class="projects">${rows.join("")}</ul>`;
}

export function renderReportList(reports: Report[]): string {
  if (reports.length === 0) {
    return '<p class="empty">No reports visible.</p>';
  }
  const rows = reports.map((r) => {
    const lock = r.password_protected ? ' <span class="lock">&#128274;</span>' : "";
    const href = r.app_route
      ? escapeHtml(r.app_route) + "/"
      : `/reports/${escapeHtml(r.report_id)}/content/index.html`;
    return (
      `<li class="report" data-id="${escapeHtml(r.report_id)}">` +
      `<a href="${href}">${escapeHtml(r.name)} v${r.version}</a>` +
      ` <span class="scope">${escapeHtml(r.scope)}</span>${lock}</li>`
    );
  });
  return `<ul class="reports">${rows.join("")}</ul>`;
}

export function renderContainerList(containers: Container[]): string {
  const rows = containers.map((c) => {
    const link = c.url
      ? `<a href="${escapeHtml(c.url)}">open</a>`
      : "";
    return (
      `<li class="container" data-id="${escapeHtml(c.container_id)}">` +
      `<span class="name">${escapeHtml(c.name)}</span>` +
      ` <span class="state state-${escapeHtml(c.state)}">${escapeHtml(c.state)}</span> ${link}</li>`
    );
  });
  return `<ul class="containers">${rows.join("")}</ul>`;
}

export function renderUsage(samples: UsageSample[]): string {
  const rows = samples.map((s) => {
    const cpu = (s.cpu_fraction * 100).toFixed(1);
    const mem = (s.memory_bytes / (1024 * 1024)).toFixed(0);
    return (
      `<tr><td>${escapeHtml(s.container_id)}</td>` +
      `<td>${cpu}%</td><td>${mem} MiB</td></tr>`
    );
  });
  return (
    '<table class="usage"><thead><tr><th>container</th><th>cpu</th>' +
    `<th>memory</th></tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}
