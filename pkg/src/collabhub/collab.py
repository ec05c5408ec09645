"""Project lifecycle and collaboration rules.

Operations are plain functions over the store; each one is a single
atomic transaction under the store lock.
"""

from __future__ import annotations

import shutil
import time
from dataclasses import dataclass

from . import errors
from .model import Project, Role, Scope, Store, VolumeKind, _new_id

CLONE_SUFFIX_LIMIT = 99


def _require_member_role(project: Project, user_id: str, roles: tuple[Role, ...]) -> None:
    if project.members.get(user_id) not in roles:
        raise errors.NotAuthorized(
            f"user {user_id} lacks {'/'.join(r.value for r in roles)} on {project.project_id}"
        )


def create_project(store: Store, actor_id: str, name: str, scope: Scope, image_ref: str) -> Project:
    if not name:
        raise errors.HubError("project name must be non-empty")
    with store.lock:
        store.get_user(actor_id)
        for p in store.projects.values():
            if p.name == name and p.owner_id == actor_id:
                raise errors.DuplicateProjectName(name)
        project = Project(
            project_id=_new_id("p"),
            name=name,
            scope=scope,
            members={actor_id: Role.OWNER},
            image_ref=image_ref,
            created_at=time.time(),
        )
        store.projects[project.project_id] = project
        return project


def clone_project(store: Store, actor_id: str, source_id: str) -> Project:
    with store.lock:
        store.get_user(actor_id)
        source = store.get_project(source_id)
        if actor_id not in source.members and source.scope is Scope.PRIVATE:
            raise errors.AccessDenied("private project, not a member")
        name = source.name
        taken = {p.name for p in store.projects.values() if p.owner_id == actor_id}
        if name in taken:
            for n in range(2, CLONE_SUFFIX_LIMIT + 1):
                candidate = f"{name}-{n}"
                if candidate not in taken:
                    name = candidate
                    break
            else:
                raise errors.NameCollision(f"no free clone name for {source.name!r}")
        clone = Project(
            project_id=_new_id("p"),
            name=name,
            scope=Scope.PRIVATE,
            members={actor_id: Role.OWNER},
            image_ref=source.image_ref,
            attached_volume_ids=set(source.attached_volume_ids),
            created_at=time.time(),
        )
        store.projects[clone.project_id] = clone
        root = store.storage_root
    # Copy the share folder outside the lock; private workdirs are never copied.
    if root is not None:
        src_share = root / "projects" / source.project_id / "share"
        dst_share = root / "projects" / clone.project_id / "share"
        if src_share.is_dir():
            shutil.copytree(src_share, dst_share, dirs_exist_ok=True)
    return clone


def add_collaborator(store: Store, actor_id: str, project_id: str, user_id: str, role: Role) -> Project:
    if role is Role.OWNER:
        raise errors.CannotGrantOwner("owner role cannot be granted")
    with store.lock:
        project = store.get_project(project_id)
        _require_member_role(project, actor_id, (Role.OWNER, Role.ADMINISTRATOR))
        store.get_user(user_id)
        if project.members.get(user_id) is Role.OWNER:
            raise errors.CannotGrantOwner("cannot change the owner's role")
        project.members[user_id] = role
        return project


def join_project(store: Store, actor_id: str, project_id: str) -> Project:
    with store.lock:
        store.get_user(actor_id)
        project = store.get_project(project_id)
        if actor_id in project.members:
            raise errors.AlreadyMember(actor_id)
        if project.scope is Scope.PRIVATE:
            raise errors.AccessDenied("cannot join a private project")
        project.members[actor_id] = Role.COLLABORATOR
        return project


def leave_project(store: Store, actor_id: str, project_id: str) -> Project:
    with store.lock:
        project = store.get_project(project_id)
        role = project.members.get(actor_id)
        if role is None:
            raise errors.NotMember(actor_id)
        if role is Role.OWNER:
            raise errors.OwnerCannotLeave(actor_id)
        del project.members[actor_id]
        # The private workdir is kept but detached under an archived path.
        user = store.get_user(actor_id)
        store.archived_workdirs.append(
            f"projects/{project.project_id}/workdir-archived/{user.username}"
        )
        return project


def configure_project(
    store: Store,
    actor_id: str,
    project_id: str,
    image_ref: str | None = None,
    attach_volumes: list[str] | None = None,
    detach_volumes: list[str] | None = None,
    share_readonly_for_collaborators: bool | None = None,
) -> Project:
    with store.lock:
        project = store.get_project(project_id)
        _require_member_role(project, actor_id, (Role.OWNER, Role.ADMINISTRATOR))
        to_attach = []
        for vid in attach_volumes or ():
            vol = store.get_volume(vid)
            if vol.kind is VolumeKind.STORAGE and vol.acl:
                for member_id in project.members:
                    if not store.acl_admits(member_id, vol.acl):
                        raise errors.VolumeAclViolation(
                            f"volume {vol.name} excludes member {member_id}"
                        )
            to_attach.append(vid)
        for vid in detach_volumes or ():
            store.get_volume(vid)
        # All checks passed: apply every field in one shot.
        if image_ref is not None:
            project.image_ref = image_ref
        project.attached_volume_ids.update(to_attach)
        project.attached_volume_ids.difference_update(detach_volumes or ())
        if share_readonly_for_collaborators is not None:
            project.share_readonly_for_collaborators = share_readonly_for_collaborators
        return project


def set_project_scope(store: Store, actor_id: str, project_id: str, scope: Scope) -> Project:
    with store.lock:
        project = store.get_project(project_id)
        _require_member_role(project, actor_id, (Role.OWNER, Role.ADMINISTRATOR))
        project.scope = scope
        return project


@dataclass
class ProjectListing:
    project: Project
    is_member: bool
    joinable: bool


def list_projects(store: Store, viewer_id: str | None) -> list[ProjectListing]:
    """Membership plus scope-based visibility.

    Anonymous viewers see only public projects; authenticated viewers
    additionally see internal ones (flagged joinable when not a member).
    """
    out = []
    with store.lock:
        for project in sorted(store.projects.values(), key=lambda p: (p.name, p.project_id)):
            is_member = viewer_id is not None and viewer_id in project.members
            if is_member:
                out.append(ProjectListing(project, True, False))
            elif project.scope is Scope.PUBLIC:
                out.append(ProjectListing(project, False, viewer_id is not None))
            elif project.scope is Scope.INTERNAL and viewer_id is not None:
                out.append(ProjectListing(project, False, True))
    return out
