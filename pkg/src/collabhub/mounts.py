"""Mount-plan compilation.

Turns a container plus its owner's memberships into a deterministic,
conflict-free list of (source, target, mode) bindings that realizes the
platform's filesystem view: a private home, per-project workdir and
share folders, read-only report snapshots, service folders and the two
volume families.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from . import errors, reports
from .model import Container, Store, Role, VolumeKind

_SANITIZE_RE = re.compile(r"[^a-z0-9_-]")
_HOME_ROOT_RE = re.compile(r"^/home/[^/]+$")

MODE_RW = "rw"
MODE_RO = "ro"


def sanitize_name(name: str) -> str:
    return _SANITIZE_RE.sub("_", name.lower())


@dataclass(frozen=True)
class MountEntry:
    source: str
    target: str
    mode: str

    def to_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "mode": self.mode}


@dataclass
class MountPlan:
    entries: list[MountEntry]
    numeric_id: int

    def to_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.entries])


def _sanitized_unique(names: dict[str, str], raw: str, namespace: str, ident: str) -> str:
    """Register raw name in a per-namespace table, failing on collisions.

    Two distinct objects (distinguished by ident) whose sanitized names
    coincide would produce clashing targets; that is a hard error.
    """
    clean = sanitize_name(raw)
    key = f"{namespace}:{clean}"
    if key in names and names[key] != ident:
        raise errors.TargetCollision(f"two names map to {clean!r} under {namespace}")
    names[key] = ident
    return clean


def plan_mounts(store: Store, container: Container | str) -> MountPlan:
    with store.lock:
        if isinstance(container, str):
            container = store.get_container(container)
        owner = store.get_user(container.owner_id)
        home = f"/home/{owner.username}"
        entries = [MountEntry(f"users/{owner.username}", home, MODE_RW)]
        seen: dict[str, str] = {}

        for pid in container.attached_project_ids:
            project = store.get_project(pid)
            role = project.members.get(owner.user_id)
            if role is None:
                raise errors.NotMemberOfProject(f"{owner.username} not in {project.name}")
            pname = _sanitized_unique(seen, project.name, "project", pid)
            entries.append(
                MountEntry(f"projects/{pid}/workdir/{owner.username}", f"{home}/workdir/{pname}", MODE_RW)
            )
            share_mode = (
                MODE_RO
                if project.share_readonly_for_collaborators and role is Role.COLLABORATOR
                else MODE_RW
            )
            entries.append(MountEntry(f"projects/{pid}/share", f"{home}/share/{pname}", share_mode))
            entries.append(
                MountEntry(
                    f"projects/{pid}/prepare/{owner.username}",
                    f"{home}/reports/{pname}/prepare",
                    MODE_RW,
                )
            )
            rnames: dict[str, str] = {}
            for report in store.reports_of(pid):
                if not reports.visible_to(store, report, owner.user_id):
                    continue
                rname = _sanitized_unique(rnames, report.name, f"report:{pid}", report.name)
                if rname == "prepare":
                    raise errors.TargetCollision("report name clashes with the prepare folder")
                entries.append(
                    MountEntry(
                        f"reports/{report.report_id}/v{report.version}",
                        f"{home}/reports/{pname}/{rname}/v{report.version}",
                        MODE_RO,
                    )
                )

        for binding in store.bindings_of(owner.user_id):
            label = _sanitized_unique(seen, binding.folder_label, "service", binding.binding_id)
            entries.append(
                MountEntry(
                    f"services/{owner.username}/{binding.folder_label}",
                    f"{home}/service/{label}",
                    MODE_RW,
                )
            )

        for vid in sorted(container.attached_functional_volume_ids):
            vol = store.get_volume(vid)
            vname = _sanitized_unique(seen, vol.name, "fvol", vid)
            mode = MODE_RW if vol.maintainer_id == owner.user_id else MODE_RO
            entries.append(MountEntry(vol.backing_path, f"/vol/{vname}", mode))

        storage_ids = set()
        for pid in container.attached_project_ids:
            storage_ids.update(store.get_project(pid).attached_volume_ids)
        for vid in sorted(storage_ids):
            vol = store.get_volume(vid)
            if vol.kind is not VolumeKind.STORAGE:
                continue
            if not store.acl_admits(owner.user_id, vol.acl):
                continue
            vname = _sanitized_unique(seen, vol.name, "svol", vid)
            entries.append(MountEntry(vol.backing_path, f"/mnt/{vname}", MODE_RO))

        entries.sort(key=lambda e: e.target)
        return MountPlan(entries=entries, numeric_id=owner.numeric_id)


def validate_plan(plan: MountPlan) -> list[str]:
    """Re-check all plan invariants; violations come back as data."""
    violations = []
    targets = [e.target for e in plan.entries]
    for e in plan.entries:
        if not e.target.startswith("/"):
            violations.append(f"non-absolute target: {e.target}")
        if "//" in e.target or e.target != e.target.rstrip("/") or "/../" in e.target + "/":
            violations.append(f"non-normalized target: {e.target}")
        if e.mode not in (MODE_RW, MODE_RO):
            violations.append(f"bad mode: {e.mode}")
    if len(set(targets)) != len(targets):
        dupes = sorted({t for t in targets if targets.count(t) > 1})
        violations.append(f"duplicate target: {', '.join(dupes)}")
    if targets != sorted(targets):
        violations.append("entries not sorted by target")
    for parent in targets:
        if _HOME_ROOT_RE.match(parent):
            continue
        for child in targets:
            if child != parent and child.startswith(parent + "/"):
                violations.append(f"target {parent} is a prefix-parent of {child}")
    # A read-only source must never appear writable elsewhere in the plan.
    ro_sources = {e.source for e in plan.entries if e.mode == MODE_RO}
    for e in plan.entries:
        if e.mode == MODE_RW and e.source in ro_sources:
            violations.append(f"write escalation on source {e.source}")
    return violations
