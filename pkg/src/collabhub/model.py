"""Domain types and the persistent state store.

The store keeps everything in memory behind a single re-entrant lock and
can serialize itself to a checksummed JSON snapshot.  It also plays the
role of the local user registry: stable POSIX-style numeric ids are
allocated at registration time and never reused.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import errors

SNAPSHOT_FORMAT_VERSION = 1
NUMERIC_ID_BASE = 1000
USERNAME_RE = re.compile(r"^[a-z][a-z0-9_-]{0,31}$")


def _new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


class Scope(str, Enum):
    PRIVATE = "private"
    INTERNAL = "internal"
    PUBLIC = "public"


class Role(str, Enum):
    OWNER = "owner"
    ADMINISTRATOR = "administrator"
    COLLABORATOR = "collaborator"


class VolumeKind(str, Enum):
    STORAGE = "storage"
    FUNCTIONAL = "functional"


class ContainerState(str, Enum):
    CREATED = "created"
    STARTING = "starting"
    RUNNING = "running"
    STOPPING = "stopping"
    STOPPED = "stopped"
    FAILED = "failed"


class ReportKind(str, Enum):
    STATIC_BUNDLE = "static_bundle"
    SERVED_APP = "served_app"


class ServiceKind(str, Enum):
    VERSION_CONTROL = "version_control"
    CLOUD_SYNC = "cloud_sync"


@dataclass
class User:
    user_id: str
    username: str
    email: str
    numeric_id: int
    created_at: float

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "username": self.username,
            "email": self.email,
            "numeric_id": self.numeric_id,
            "created_at": self.created_at,
        }


@dataclass
class Project:
    project_id: str
    name: str
    scope: Scope
    members: dict[str, Role]  # user_id -> role
    image_ref: str
    attached_volume_ids: set[str] = field(default_factory=set)
    share_readonly_for_collaborators: bool = False
    created_at: float = field(default_factory=time.time)

    @property
    def owner_id(self) -> str:
        for uid, role in self.members.items():
            if role is Role.OWNER:
                return uid
        raise AssertionError("project without owner")

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "name": self.name,
            "scope": self.scope.value,
            "members": {u: r.value for u, r in sorted(self.members.items())},
            "image_ref": self.image_ref,
            "attached_volume_ids": sorted(self.attached_volume_ids),
            "share_readonly_for_collaborators": self.share_readonly_for_collaborators,
            "created_at": self.created_at,
        }


@dataclass
class Volume:
    volume_id: str
    name: str
    kind: VolumeKind
    backing_path: str
    maintainer_id: str | None = None  # required iff functional
    acl: set[str] = field(default_factory=set)  # user ids or group names, storage only

    def to_dict(self) -> dict:
        return {
            "volume_id": self.volume_id,
            "name": self.name,
            "kind": self.kind.value,
            "backing_path": self.backing_path,
            "maintainer_id": self.maintainer_id,
            "acl": sorted(self.acl),
        }


@dataclass
class Container:
    container_id: str
    owner_id: str
    name: str
    image_ref: str
    attached_project_ids: list[str] = field(default_factory=list)
    attached_functional_volume_ids: set[str] = field(default_factory=set)
    state: ContainerState = ContainerState.CREATED
    upstream_address: str | None = None
    route_prefix: str | None = None

    def to_dict(self) -> dict:
        return {
            "container_id": self.container_id,
            "owner_id": self.owner_id,
            "name": self.name,
            "image_ref": self.image_ref,
            "attached_project_ids": list(self.attached_project_ids),
            "attached_functional_volume_ids": sorted(self.attached_functional_volume_ids),
            "state": self.state.value,
            "upstream_address": self.upstream_address,
            "route_prefix": self.route_prefix,
        }


@dataclass
class Report:
    report_id: str
    name: str
    project_id: str
    creator_id: str
    version: int
    scope: Scope
    kind: ReportKind
    content_root: str
    content_digest: str
    password_digest: str | None = None  # "salthex:digesthex", never plaintext
    created_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "name": self.name,
            "project_id": self.project_id,
            "creator_id": self.creator_id,
            "version": self.version,
            "scope": self.scope.value,
            "kind": self.kind.value,
            "content_root": self.content_root,
            "content_digest": self.content_digest,
            "password_digest": self.password_digest,
            "created_at": self.created_at,
        }


@dataclass
class ServiceBinding:
    binding_id: str
    user_id: str
    service_kind: ServiceKind
    endpoint: str
    credential: str  # token or public key, never a password
    folder_label: str

    def to_dict(self) -> dict:
        return {
            "binding_id": self.binding_id,
            "user_id": self.user_id,
            "service_kind": self.service_kind.value,
            "endpoint": self.endpoint,
            "credential": self.credential,
            "folder_label": self.folder_label,
        }


class Store:
    """In-memory state store with transactional snapshot persistence.

    All mutations happen under ``self.lock``; readers take the same lock
    so every read observes a consistent state.  No lock is ever held
    across a driver or network call.
    """

    def __init__(self, storage_root: str | Path | None = None):
        self.lock = threading.RLock()
        self.storage_root = Path(storage_root) if storage_root else None
        self.users: dict[str, User] = {}
        self.groups: dict[str, set[str]] = {}  # group name -> user_ids
        self.projects: dict[str, Project] = {}
        self.volumes: dict[str, Volume] = {}
        self.containers: dict[str, Container] = {}
        self.reports: dict[str, Report] = {}
        self.bindings: dict[str, ServiceBinding] = {}
        self.archived_workdirs: list[str] = []

    # --- user registry ---------------------------------------------------

    def register_user(self, username: str, email: str) -> User:
        if not USERNAME_RE.match(username or ""):
            raise errors.InvalidUsername(f"invalid username: {username!r}")
        with self.lock:
            if any(u.username == username for u in self.users.values()):
                raise errors.DuplicateUsername(username)
            user = User(
                user_id=_new_id("u"),
                username=username,
                email=email,
                numeric_id=NUMERIC_ID_BASE + len(self.users),
                created_at=time.time(),
            )
            self.users[user.user_id] = user
            return user

    def user_by_name(self, username: str) -> User | None:
        with self.lock:
            for u in self.users.values():
                if u.username == username:
                    return u
            return None

    def get_user(self, user_id: str) -> User:
        with self.lock:
            try:
                return self.users[user_id]
            except KeyError:
                raise errors.UnknownUser(user_id) from None

    def set_group(self, name: str, user_ids: set[str]) -> None:
        with self.lock:
            self.groups[name] = set(user_ids)

    def user_in_group(self, user_id: str, group: str) -> bool:
        with self.lock:
            return user_id in self.groups.get(group, set())

    def acl_admits(self, user_id: str, acl: set[str]) -> bool:
        """Empty ACL means unrestricted; entries are user ids or group names."""
        if not acl:
            return True
        with self.lock:
            if user_id in acl:
                return True
            return any(self.user_in_group(user_id, entry) for entry in acl)

    # --- LDIF export -----------------------------------------------------

    def export_ldif(self) -> str:
        """RFC 2849 text, one entry per user, ascending uidNumber."""
        with self.lock:
            users = sorted(self.users.values(), key=lambda u: u.numeric_id)
        blocks = []
        for u in users:
            blocks.append(
                "\n".join(
                    [
                        f"dn: uid={u.username},ou=users,dc=hub,dc=local",
                        "objectClass: inetOrgPerson",
                        "objectClass: posixAccount",
                        f"uid: {u.username}",
                        f"uidNumber: {u.numeric_id}",
                        f"gidNumber: {u.numeric_id}",
                        f"cn: {u.username}",
                        f"homeDirectory: /home/{u.username}",
                        f"mail: {u.email}",
                    ]
                )
            )
        return "\n\n".join(blocks) + ("\n" if blocks else "")

    # --- lookups ---------------------------------------------------------

    def get_project(self, project_id: str) -> Project:
        with self.lock:
            try:
                return self.projects[project_id]
            except KeyError:
                raise errors.UnknownProject(project_id) from None

    def get_volume(self, volume_id: str) -> Volume:
        with self.lock:
            try:
                return self.volumes[volume_id]
            except KeyError:
                raise errors.UnknownVolume(volume_id) from None

    def get_container(self, container_id: str) -> Container:
        with self.lock:
            try:
                return self.containers[container_id]
            except KeyError:
                raise errors.UnknownContainer(container_id) from None

    def get_report(self, report_id: str) -> Report:
        with self.lock:
            try:
                return self.reports[report_id]
            except KeyError:
                raise errors.UnknownReport(report_id) from None

    def add_volume(
        self,
        name: str,
        kind: VolumeKind,
        backing_path: str = "",
        maintainer_id: str | None = None,
        acl: set[str] | None = None,
    ) -> Volume:
        with self.lock:
            if kind is VolumeKind.FUNCTIONAL:
                if maintainer_id is None:
                    raise errors.HubError("functional volume requires a maintainer")
                if acl:
                    raise errors.HubError("functional volume may not carry an ACL")
                self.get_user(maintainer_id)
            if any(v.name == name and v.kind == kind for v in self.volumes.values()):
                raise errors.DuplicateVolumeName(f"{kind.value}/{name}")
            vol = Volume(
                volume_id=_new_id("v"),
                name=name,
                kind=kind,
                backing_path=backing_path or f"volumes/{kind.value}/{name}",
                maintainer_id=maintainer_id if kind is VolumeKind.FUNCTIONAL else None,
                acl=set(acl or ()) if kind is VolumeKind.STORAGE else set(),
            )
            self.volumes[vol.volume_id] = vol
            return vol

    def add_binding(
        self,
        user_id: str,
        service_kind: ServiceKind,
        endpoint: str,
        credential: str,
        folder_label: str,
    ) -> ServiceBinding:
        with self.lock:
            self.get_user(user_id)
            if any(
                b.user_id == user_id and b.folder_label == folder_label
                for b in self.bindings.values()
            ):
                raise errors.DuplicateBinding(folder_label)
            binding = ServiceBinding(
                binding_id=_new_id("b"),
                user_id=user_id,
                service_kind=service_kind,
                endpoint=endpoint,
                credential=credential,
                folder_label=folder_label,
            )
            self.bindings[binding.binding_id] = binding
            return binding

    def bindings_of(self, user_id: str) -> list[ServiceBinding]:
        with self.lock:
            return sorted(
                (b for b in self.bindings.values() if b.user_id == user_id),
                key=lambda b: b.folder_label,
            )

    def reports_of(self, project_id: str, name: str | None = None) -> list[Report]:
        with self.lock:
            out = [
                r
                for r in self.reports.values()
                if r.project_id == project_id and (name is None or r.name == name)
            ]
            return sorted(out, key=lambda r: (r.name, r.version))

    # --- snapshot persistence --------------------------------------------

    def observable_state(self) -> dict:
        """Canonical dict covering everything the query operations expose."""
        with self.lock:
            return {
                "users": [u.to_dict() for u in sorted(self.users.values(), key=lambda u: u.numeric_id)],
                "groups": {g: sorted(m) for g, m in sorted(self.groups.items())},
                "projects": [p.to_dict() for p in sorted(self.projects.values(), key=lambda p: p.project_id)],
                "volumes": [v.to_dict() for v in sorted(self.volumes.values(), key=lambda v: v.volume_id)],
                "containers": [c.to_dict() for c in sorted(self.containers.values(), key=lambda c: c.container_id)],
                "reports": [r.to_dict() for r in sorted(self.reports.values(), key=lambda r: r.report_id)],
                "bindings": [b.to_dict() for b in sorted(self.bindings.values(), key=lambda b: b.binding_id)],
                "archived_workdirs": sorted(self.archived_workdirs),
            }

    def dumps(self) -> str:
        doc = {
            "format_version": SNAPSHOT_FORMAT_VERSION,
            "state": self.observable_state(),
        }
        body = json.dumps(doc, sort_keys=True)
        checksum = hashlib.sha256(body.encode()).hexdigest()
        return body + "\nsha256:" + checksum + "\n"

    def persist(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.dumps())
        tmp.replace(path)

    @classmethod
    def loads(cls, text: str, storage_root: str | Path | None = None) -> "Store":
        try:
            body, trailer = text.rstrip("\n").rsplit("\n", 1)
        except ValueError:
            raise errors.CorruptSnapshot("missing checksum trailer") from None
        if not trailer.startswith("sha256:"):
            raise errors.CorruptSnapshot("missing checksum trailer")
        if hashlib.sha256(body.encode()).hexdigest() != trailer[len("sha256:"):]:
            raise errors.CorruptSnapshot("checksum mismatch")
        try:
            doc = json.loads(body)
        except json.JSONDecodeError:
            raise errors.CorruptSnapshot("invalid JSON body") from None
        if doc.get("format_version") != SNAPSHOT_FORMAT_VERSION:
            raise errors.CorruptSnapshot(f"unsupported format: {doc.get('format_version')}")
        state = doc["state"]
        store = cls(storage_root=storage_root)
        for d in state["users"]:
            store.users[d["user_id"]] = User(**d)
        store.groups = {g: set(m) for g, m in state["groups"].items()}
        for d in state["projects"]:
            store.projects[d["project_id"]] = Project(
                project_id=d["project_id"],
                name=d["name"],
                scope=Scope(d["scope"]),
                members={u: Role(r) for u, r in d["members"].items()},
                image_ref=d["image_ref"],
                attached_volume_ids=set(d["attached_volume_ids"]),
                share_readonly_for_collaborators=d["share_readonly_for_collaborators"],
                created_at=d["created_at"],
            )
        for d in state["volumes"]:
            store.volumes[d["volume_id"]] = Volume(
                volume_id=d["volume_id"],
                name=d["name"],
                kind=VolumeKind(d["kind"]),
                backing_path=d["backing_path"],
                maintainer_id=d["maintainer_id"],
                acl=set(d["acl"]),
            )
        for d in state["containers"]:
            store.containers[d["container_id"]] = Container(
                container_id=d["container_id"],
                owner_id=d["owner_id"],
                name=d["name"],
                image_ref=d["image_ref"],
                attached_project_ids=list(d["attached_project_ids"]),
                attached_functional_volume_ids=set(d["attached_functional_volume_ids"]),
                state=ContainerState(d["state"]),
                upstream_address=d["upstream_address"],
                route_prefix=d["route_prefix"],
            )
        for d in state["reports"]:
            store.reports[d["report_id"]] = Report(
                report_id=d["report_id"],
                name=d["name"],
                project_id=d["project_id"],
                creator_id=d["creator_id"],
                version=d["version"],
                scope=Scope(d["scope"]),
                kind=ReportKind(d["kind"]),
                content_root=d["content_root"],
                content_digest=d["content_digest"],
                password_digest=d["password_digest"],
                created_at=d["created_at"],
            )
        for d in state["bindings"]:
            store.bindings[d["binding_id"]] = ServiceBinding(
                binding_id=d["binding_id"],
                user_id=d["user_id"],
                service_kind=ServiceKind(d["service_kind"]),
                endpoint=d["endpoint"],
                credential=d["credential"],
                folder_label=d["folder_label"],
            )
        store.archived_workdirs = list(state["archived_workdirs"])
        return store

    @classmethod
    def restore(cls, path: str | Path, storage_root: str | Path | None = None) -> "Store":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise errors.CorruptSnapshot(str(exc)) from None
        return cls.loads(text, storage_root=storage_root)
