"""Exception hierarchy shared by all hub modules.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class HubError(Exception):
    """Base class for all domain errors."""

    code = "hub_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# --- registry / store ---------------------------------------------------

class DuplicateUsername(HubError):
    code = "duplicate_username"


class InvalidUsername(HubError):
    code = "invalid_username"


class UnknownUser(HubError):
    code = "unknown_user"


class CorruptSnapshot(HubError):
    code = "corrupt_snapshot"


# --- projects -----------------------------------------------------------

class UnknownProject(HubError):
    code = "unknown_project"


class DuplicateProjectName(HubError):
    code = "duplicate_project_name"


class AccessDenied(HubError):
    code = "access_denied"


class NameCollision(HubError):
    code = "name_collision"


class NotAuthorized(HubError):
    code = "not_authorized"


class CannotGrantOwner(HubError):
    code = "cannot_grant_owner"


class AlreadyMember(HubError):
    code = "already_member"


class NotMember(HubError):
    code = "not_member"


class OwnerCannotLeave(HubError):
    code = "owner_cannot_leave"


class VolumeAclViolation(HubError):
    code = "volume_acl_violation"


class UnknownVolume(HubError):
    code = "unknown_volume"


class DuplicateVolumeName(HubError):
    code = "duplicate_volume_name"


class DuplicateBinding(HubError):
    code = "duplicate_binding"


class InvalidCredential(HubError):
    code = "invalid_credential"


# --- mount planning -----------------------------------------------------

class NotMemberOfProject(HubError):
    code = "not_member_of_project"


class TargetCollision(HubError):
    code = "target_collision"


# --- runtime ------------------------------------------------------------

class UnknownContainer(HubError):
    code = "unknown_container"


class ImageNotFound(HubError):
    code = "image_not_found"


class DriverUnavailable(HubError):
    code = "driver_unavailable"


class StartTimeout(HubError):
    code = "start_timeout"


class InvalidContainerState(HubError):
    code = "invalid_container_state"


class TooManyContainers(HubError):
    code = "too_many_containers"


# --- proxy --------------------------------------------------------------

class InvalidPrefix(HubError):
    code = "invalid_prefix"


# --- reports ------------------------------------------------------------

class UnknownReport(HubError):
    code = "unknown_report"


class EmptySource(HubError):
    code = "empty_source"


class MissingIndex(HubError):
    code = "missing_index"


class NotCreator(HubError):
    code = "not_creator"


class UnknownVersion(HubError):
    code = "unknown_version"


class WrongPassword(HubError):
    code = "wrong_password"


# --- auth ---------------------------------------------------------------

class AuthRejected(HubError):
    code = "auth_rejected"


class UnknownLocalUser(HubError):
    code = "unknown_local_user"


class SessionExpired(HubError):
    code = "session_expired"
