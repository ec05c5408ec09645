"""HTTP/JSON resource surface binding every module together.

Every mutating endpoint maps 1:1 onto a module operation; domain errors
are translated to stable machine codes with the status-class rules:
authorization 403, not-found 404, validation 422, conflicts 409.
"""

from __future__ import annotations

import mimetypes
import tempfile
import threading
from pathlib import Path

from fastapi import Depends, FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import collab, errors, reports
from .hub import Hub
from .model import ContainerState, ReportKind, Role, Scope, ServiceKind, User, VolumeKind
from .mounts import MountEntry, MountPlan
from .runtime import ContainerManager

STATUS_BY_ERROR: dict[type[errors.HubError], int] = {
    errors.NotAuthorized: 403,
    errors.AccessDenied: 403,
    errors.NotCreator: 403,
    errors.NotMember: 403,
    errors.NotMemberOfProject: 403,
    errors.WrongPassword: 403,
    errors.AuthRejected: 401,
    errors.UnknownLocalUser: 401,
    errors.SessionExpired: 401,
    errors.UnknownUser: 404,
    errors.UnknownProject: 404,
    errors.UnknownVolume: 404,
    errors.UnknownContainer: 404,
    errors.UnknownReport: 404,
    errors.UnknownVersion: 404,
    errors.DuplicateUsername: 409,
    errors.DuplicateProjectName: 409,
    errors.DuplicateVolumeName: 409,
    errors.DuplicateBinding: 409,
    errors.AlreadyMember: 409,
    errors.NameCollision: 409,
    errors.OwnerCannotLeave: 409,
    errors.TooManyContainers: 409,
    errors.InvalidContainerState: 409,
    errors.InvalidUsername: 422,
    errors.InvalidPrefix: 422,
    errors.InvalidCredential: 422,
    errors.VolumeAclViolation: 422,
    errors.CannotGrantOwner: 422,
    errors.EmptySource: 422,
    errors.MissingIndex: 422,
    errors.TargetCollision: 422,
    errors.DriverUnavailable: 503,
    errors.StartTimeout: 503,
}


class LoginBody(BaseModel):
    assertion: str


class ProjectBody(BaseModel):
    name: str
    scope: str = "private"
    image_ref: str = "env:base"


class CollaboratorBody(BaseModel):
    username: str
    role: str = "collaborator"


class ScopeBody(BaseModel):
    scope: str


class ConfigBody(BaseModel):
    image_ref: str | None = None
    attach_volumes: list[str] | None = None
    detach_volumes: list[str] | None = None
    share_readonly_for_collaborators: bool | None = None


class ContainerBody(BaseModel):
    name: str
    image_ref: str | None = None
    project_ids: list[str] = []
    functional_volume_ids: list[str] = []


class ReportBody(BaseModel):
    project_id: str
    name: str
    kind: str = "static_bundle"
    scope: str = "private"
    password: str | None = None
    files: dict[str, str] | None = None
    source_path: str | None = None


class VolumeBody(BaseModel):
    name: str
    kind: str
    maintainer_id: str | None = None
    acl: list[str] = []
    backing_path: str = ""


class BindingBody(BaseModel):
    service_kind: str
    endpoint: str
    credential: str
    folder_label: str


def _project_json(listing_or_project, is_member=None, joinable=None) -> dict:
    if isinstance(listing_or_project, collab.ProjectListing):
        project = listing_or_project.project
        is_member = listing_or_project.is_member
        joinable = listing_or_project.joinable
    else:
        project = listing_or_project
    body = project.to_dict()
    body["is_member"] = bool(is_member)
    body["joinable"] = bool(joinable)
    return body


def _container_json(container) -> dict:
    body = container.to_dict()
    body["url"] = (
        f"{container.route_prefix}/" if container.state is ContainerState.RUNNING else None
    )
    return body


def create_app(hub: Hub) -> FastAPI:
    app = FastAPI(title="collabhub", docs_url=None, redoc_url=None, openapi_url="/api/spec")
    store = hub.store
    manager: ContainerManager = hub.containers
    report_app_routes: dict[str, str] = {}
    report_app_lock = threading.Lock()

    @app.exception_handler(errors.HubError)
    async def hub_error_handler(_req: Request, exc: errors.HubError):
        status = STATUS_BY_ERROR.get(type(exc), 500)
        return JSONResponse(status_code=status, content={"error": exc.code, "detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error_handler(_req: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"error": "validation_error",
                                                      "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_req: Request, exc: RequestValidationError):
        malformed = any(e.get("type") == "json_invalid" for e in exc.errors())
        if malformed:
            return JSONResponse(status_code=400, content={"error": "malformed_json"})
        return JSONResponse(status_code=422, content={"error": "validation_error",
                                                      "detail": exc.errors()})

    def _token(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:]
        return None

    def current_user(request: Request) -> User:
        token = _token(request)
        if token is None:
            raise errors.SessionExpired("missing bearer token")
        return hub.sessions.resolve(token)

    def optional_user(request: Request) -> User | None:
        token = _token(request)
        if token is None:
            return None
        return hub.sessions.resolve(token)

    # --- auth ------------------------------------------------------------

    @app.post("/auth/login")
    def login(body: LoginBody):
        session, user = hub.sessions.login(body.assertion)
        hub.maybe_save()
        return {"token": session.token, "user": user.to_dict(),
                "expires_at": session.expires_at}

    @app.post("/auth/logout")
    def logout(request: Request, user: User = Depends(current_user)):
        hub.sessions.logout(_token(request))
        return {"ok": True}

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    # --- projects --------------------------------------------------------

    @app.get("/projects")
    def get_projects(viewer: User | None = Depends(optional_user)):
        listings = collab.list_projects(store, viewer.user_id if viewer else None)
        return [_project_json(l) for l in listings]

    @app.post("/projects", status_code=201)
    def post_project(body: ProjectBody, user: User = Depends(current_user)):
        project = collab.create_project(store, user.user_id, body.name,
                                        Scope(body.scope), body.image_ref)
        hub.maybe_save()
        return _project_json(project, is_member=True)

    @app.post("/projects/{project_id}/clone", status_code=201)
    def post_clone(project_id: str, user: User = Depends(current_user)):
        clone = collab.clone_project(store, user.user_id, project_id)
        hub.maybe_save()
        return _project_json(clone, is_member=True)

    @app.post("/projects/{project_id}/join")
    def post_join(project_id: str, user: User = Depends(current_user)):
        project = collab.join_project(store, user.user_id, project_id)
        hub.maybe_save()
        return _project_json(project, is_member=True)

    @app.post("/projects/{project_id}/leave")
    def post_leave(project_id: str, user: User = Depends(current_user)):
        project = collab.leave_project(store, user.user_id, project_id)
        hub.maybe_save()
        return _project_json(project)

    @app.post("/projects/{project_id}/collaborators")
    def post_collaborator(project_id: str, body: CollaboratorBody,
                          user: User = Depends(current_user)):
        target = store.user_by_name(body.username)
        if target is None:
            raise errors.UnknownUser(body.username)
        project = collab.add_collaborator(store, user.user_id, project_id,
                                          target.user_id, Role(body.role))
        hub.maybe_save()
        return _project_json(project, is_member=True)

    @app.post("/projects/{project_id}/scope")
    def post_scope(project_id: str, body: ScopeBody, user: User = Depends(current_user)):
        project = collab.set_project_scope(store, user.user_id, project_id, Scope(body.scope))
        hub.maybe_save()
        return _project_json(project, is_member=True)

    @app.post("/projects/{project_id}/config")
    def post_config(project_id: str, body: ConfigBody, user: User = Depends(current_user)):
        project = collab.configure_project(
            store, user.user_id, project_id,
            image_ref=body.image_ref,
            attach_volumes=body.attach_volumes,
            detach_volumes=body.detach_volumes,
            share_readonly_for_collaborators=body.share_readonly_for_collaborators,
        )
        hub.maybe_save()
        return _project_json(project, is_member=True)

    # --- containers ------------------------------------------------------

    @app.get("/containers")
    def get_containers(user: User = Depends(current_user)):
        with store.lock:
            own = [c for c in store.containers.values() if c.owner_id == user.user_id]
        return [_container_json(c) for c in sorted(own, key=lambda c: c.container_id)]

    @app.post("/containers", status_code=201)
    def post_container(body: ContainerBody, user: User = Depends(current_user)):
        container = manager.create(
            user.user_id, body.name,
            body.image_ref or "env:base",
            project_ids=body.project_ids,
            functional_volume_ids=body.functional_volume_ids,
        )
        hub.maybe_save()
        return _container_json(container)

    @app.get("/containers/{container_id}")
    def get_container(container_id: str, user: User = Depends(current_user)):
        container = manager.inspect(container_id)
        if container.owner_id != user.user_id:
            raise errors.NotAuthorized("not the container owner")
        return _container_json(container)

    @app.post("/containers/{container_id}/start", status_code=202)
    def post_start(container_id: str, user: User = Depends(current_user)):
        container = store.get_container(container_id)
        if container.owner_id != user.user_id:
            raise errors.NotAuthorized("not the container owner")
        if container.state in (ContainerState.RUNNING, ContainerState.STARTING):
            return _container_json(container)
        if container.state not in (ContainerState.CREATED, ContainerState.STOPPED):
            raise errors.InvalidContainerState(container.state.value)

        def run():
            try:
                manager.start(container_id)
            except errors.HubError:
                pass
            hub.maybe_save()

        threading.Thread(target=run, daemon=True).start()
        return {"container_id": container_id, "state": "starting"}

    @app.post("/containers/{container_id}/stop")
    def post_stop(container_id: str, user: User = Depends(current_user)):
        container = store.get_container(container_id)
        if container.owner_id != user.user_id:
            raise errors.NotAuthorized("not the container owner")
        manager.stop(container_id)
        hub.maybe_save()
        return _container_json(store.get_container(container_id))

    @app.get("/usage")
    def get_usage(user: User = Depends(current_user)):
        return [s.to_dict() for s in manager.usage()]

    # --- reports ---------------------------------------------------------

    @app.get("/reports")
    def get_reports(viewer: User | None = Depends(optional_user)):
        out = []
        for r in reports.list_reports(store, viewer.user_id if viewer else None):
            body = r.to_dict()
            body.pop("password_digest", None)
            body["password_protected"] = r.password_digest is not None
            body.pop("content_root", None)
            out.append(body)
        return out

    @app.post("/reports", status_code=201)
    def post_report(body: ReportBody, user: User = Depends(current_user)):
        if body.source_path:
            source = Path(body.source_path)
            report = reports.publish_report(
                store, user.user_id, body.project_id, body.name, source,
                ReportKind(body.kind), Scope(body.scope), password=body.password,
            )
        elif body.files:
            with tempfile.TemporaryDirectory() as tmp:
                for rel, content in body.files.items():
                    dest = Path(tmp) / rel
                    dest.parent.mkdir(parents=True, exist_ok=True)
                    dest.write_text(content)
                report = reports.publish_report(
                    store, user.user_id, body.project_id, body.name, tmp,
                    ReportKind(body.kind), Scope(body.scope), password=body.password,
                )
        else:
            raise errors.EmptySource("no files or source_path given")
        hub.maybe_save()
        result = report.to_dict()
        result.pop("password_digest", None)
        return result

    def _open(report_id: str, version: int | None, password: str | None,
              viewer: User | None) -> reports.ReportHandle:
        return reports.open_report(
            store, viewer.user_id if viewer else None, report_id,
            version=version, password=password,
        )

    @app.get("/reports/{report_id}")
    def get_report(report_id: str, version: int | None = None, password: str | None = None,
                   viewer: User | None = Depends(optional_user)):
        handle = _open(report_id, version, password, viewer)
        report = handle.report
        files = sorted(
            p.relative_to(handle.content_root).as_posix()
            for p in handle.content_root.rglob("*") if p.is_file()
        )
        body = report.to_dict()
        body.pop("password_digest", None)
        body.pop("content_root", None)
        body["password_protected"] = report.password_digest is not None
        body["files"] = files
        if report.kind is ReportKind.SERVED_APP:
            body["app_route"] = _ensure_report_app(handle)
        return body

    def _ensure_report_app(handle: reports.ReportHandle) -> str:
        """Back a served-app report with a workload and a proxy route."""
        report = handle.report
        prefix = f"/report/{report.report_id}"
        with report_app_lock:
            if report.report_id not in report_app_routes:
                creator = store.get_user(report.creator_id)
                plan = MountPlan(
                    entries=[MountEntry(report.content_root, "/srv/report", "ro")],
                    numeric_id=creator.numeric_id,
                )
                address = hub.driver.start_workload(
                    f"report-app-{report.report_id}", "report-app:latest", plan
                )
                hub.routes.add_route(prefix, address)
                report_app_routes[report.report_id] = address
        return prefix

    @app.get("/reports/{report_id}/content/{file_path:path}")
    def get_report_file(report_id: str, file_path: str, version: int | None = None,
                        password: str | None = None,
                        viewer: User | None = Depends(optional_user)):
        handle = _open(report_id, version, password, viewer)
        target = (handle.content_root / file_path).resolve()
        if not str(target).startswith(str(handle.content_root.resolve())):
            raise errors.AccessDenied("path escapes the report tree")
        if not target.is_file():
            raise errors.UnknownReport(file_path)
        media, _ = mimetypes.guess_type(target.name)
        return Response(content=target.read_bytes(),
                        media_type=media or "application/octet-stream")

    @app.post("/reports/{report_id}/scope")
    def post_report_scope(report_id: str, body: ScopeBody, user: User = Depends(current_user)):
        reports.set_report_scope(store, user.user_id, report_id, Scope(body.scope))
        hub.maybe_save()
        return {"ok": True}

    @app.delete("/reports/{report_id}")
    def delete_report(report_id: str, version: int | None = None,
                      user: User = Depends(current_user)):
        reports.delete_report(store, user.user_id, report_id, version=version)
        hub.maybe_save()
        return {"ok": True}

    # --- volumes and service bindings ------------------------------------

    @app.get("/volumes")
    def get_volumes(user: User = Depends(current_user)):
        with store.lock:
            vols = sorted(store.volumes.values(), key=lambda v: (v.kind.value, v.name))
        return [v.to_dict() for v in vols]

    @app.post("/volumes", status_code=201)
    def post_volume(body: VolumeBody, user: User = Depends(current_user)):
        kind = VolumeKind(body.kind)
        volume = store.add_volume(
            body.name, kind,
            backing_path=body.backing_path,
            maintainer_id=body.maintainer_id or (user.user_id if kind is VolumeKind.FUNCTIONAL else None),
            acl=set(body.acl),
        )
        hub.maybe_save()
        return volume.to_dict()

    @app.get("/bindings")
    def get_bindings(user: User = Depends(current_user)):
        return [b.to_dict() for b in store.bindings_of(user.user_id)]

    @app.post("/bindings", status_code=201)
    def post_binding(body: BindingBody, user: User = Depends(current_user)):
        if len(body.credential) < 16 and not body.credential.startswith("ssh-"):
            raise errors.InvalidCredential("credential must be a token or public key")
        binding = store.add_binding(
            user.user_id, ServiceKind(body.service_kind),
            body.endpoint, body.credential, body.folder_label,
        )
        hub.maybe_save()
        return binding.to_dict()

    # --- static UI assets -------------------------------------------------

    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
