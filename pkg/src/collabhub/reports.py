"""Publishing, versioning, scoping and retrieval of reports.

A report version is immutable once published: the source tree is copied
under the storage root and a digest over the copied tree is recorded so
later opens can prove the content never changed.
"""

from __future__ import annotations

import hashlib
import os
import secrets
import shutil
import time
from dataclasses import dataclass
from pathlib import Path

from . import errors
from .model import Report, ReportKind, Scope, Store, _new_id


def hash_password(password: str) -> str:
    salt = secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), bytes.fromhex(salt), 100_000)
    return f"{salt}:{digest.hex()}"


def check_password(password: str, stored: str) -> bool:
    salt, digest = stored.split(":", 1)
    candidate = hashlib.pbkdf2_hmac("sha256", password.encode(), bytes.fromhex(salt), 100_000)
    return secrets.compare_digest(candidate.hex(), digest)


def tree_digest(root: Path) -> str:
    """Order-stable sha256 over relative paths and file contents."""
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for fn in sorted(filenames):
            p = Path(dirpath) / fn
            rel = p.relative_to(root).as_posix()
            h.update(rel.encode())
            h.update(b"\0")
            h.update(p.read_bytes())
            h.update(b"\0")
    return h.hexdigest()


def publish_report(
    store: Store,
    actor_id: str,
    project_id: str,
    name: str,
    source_tree: str | Path,
    kind: ReportKind,
    scope: Scope,
    password: str | None = None,
) -> Report:
    source = Path(source_tree)
    if not source.is_dir() or not any(source.iterdir()):
        raise errors.EmptySource(str(source_tree))
    if kind is ReportKind.STATIC_BUNDLE and not (source / "index.html").is_file():
        raise errors.MissingIndex("static bundle requires index.html at tree root")
    if store.storage_root is None:
        raise errors.HubError("store has no storage root; cannot ingest report content")

    # Version allocation and content ingest happen in one transaction so
    # publishes for the same (project, name) are serialized.
    with store.lock:
        project = store.get_project(project_id)
        if actor_id not in project.members:
            raise errors.NotMember(actor_id)
        existing = store.reports_of(project_id, name)
        version = max((r.version for r in existing), default=0) + 1
        report_id = _new_id("r")
        content_root = store.storage_root / "reports" / report_id / f"v{version}"
        # Password applies per report name, not per version: inherit unless given.
        if password is not None:
            digest = hash_password(password)
        elif existing:
            digest = existing[-1].password_digest
        else:
            digest = None
        shutil.copytree(source, content_root)
        report = Report(
            report_id=report_id,
            name=name,
            project_id=project_id,
            creator_id=actor_id,
            version=version,
            scope=scope,
            kind=kind,
            content_root=str(content_root),
            content_digest=tree_digest(content_root),
            password_digest=digest,
            created_at=time.time(),
        )
        if password is not None:
            for r in existing:
                r.password_digest = report.password_digest
        store.reports[report.report_id] = report
    return report


def visible_to(store: Store, report: Report, viewer_id: str | None) -> bool:
    if report.creator_id == viewer_id:
        return True
    if report.scope is Scope.PUBLIC:
        return True
    if report.scope is Scope.INTERNAL:
        return viewer_id is not None
    return False


def list_reports(store: Store, viewer_id: str | None) -> list[Report]:
    with store.lock:
        return [
            r
            for r in sorted(store.reports.values(), key=lambda r: (r.project_id, r.name, r.version))
            if visible_to(store, r, viewer_id)
        ]


def latest_version(store: Store, project_id: str, name: str) -> Report | None:
    versions = store.reports_of(project_id, name)
    return versions[-1] if versions else None


@dataclass
class ReportHandle:
    report: Report
    content_root: Path
    app_route: str | None  # set for served apps


def open_report(
    store: Store,
    viewer_id: str | None,
    report_id: str,
    version: int | None = None,
    password: str | None = None,
) -> ReportHandle:
    with store.lock:
        report = store.get_report(report_id)
        if not visible_to(store, report, viewer_id):
            raise errors.AccessDenied(report_id)
        if version is not None:
            matches = [
                r for r in store.reports_of(report.project_id, report.name) if r.version == version
            ]
            if not matches:
                raise errors.UnknownVersion(f"{report.name} v{version}")
            report = matches[0]
        else:
            report = latest_version(store, report.project_id, report.name)
            assert report is not None
        if report.password_digest is not None:
            if password is None or not check_password(password, report.password_digest):
                raise errors.WrongPassword(report.name)
    route = f"/report/{report.report_id}" if report.kind is ReportKind.SERVED_APP else None
    return ReportHandle(report=report, content_root=Path(report.content_root), app_route=route)


def set_report_scope(store: Store, actor_id: str, report_id: str, scope: Scope) -> None:
    with store.lock:
        report = store.get_report(report_id)
        if report.creator_id != actor_id:
            raise errors.NotCreator(actor_id)
        # Scope applies to the report as a whole, i.e. every version.
        for r in store.reports_of(report.project_id, report.name):
            r.scope = scope


def delete_report(store: Store, actor_id: str, report_id: str, version: int | None = None) -> None:
    with store.lock:
        report = store.get_report(report_id)
        if report.creator_id != actor_id:
            raise errors.NotCreator(actor_id)
        versions = store.reports_of(report.project_id, report.name)
        if version is None:
            doomed = versions
        else:
            doomed = [r for r in versions if r.version == version]
            if not doomed:
                raise errors.UnknownVersion(f"{report.name} v{version}")
        for r in doomed:
            del store.reports[r.report_id]
    for r in doomed:
        shutil.rmtree(r.content_root, ignore_errors=True)
