"""Pluggable identity providers and session management.

The hub never stores user passwords; providers validate an opaque login
assertion and hand back a username.  Sessions are bearer tokens with a
fixed TTL.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Protocol

from . import errors
from .model import Store, User

DEFAULT_SESSION_TTL = 12 * 3600.0


class IdentityProvider(Protocol):
    def authenticate(self, assertion: str) -> str:
        """Return the asserted username or raise AuthRejected."""


class StaticProvider:
    """username -> token map; assertions look like ``user:token``."""

    def __init__(self, tokens: dict[str, str]):
        self._tokens = dict(tokens)

    def authenticate(self, assertion: str) -> str:
        username, _, token = assertion.partition(":")
        expected = self._tokens.get(username)
        if not expected or not secrets.compare_digest(expected, token):
            raise errors.AuthRejected(username)
        return username


class SignedAssertionProvider:
    """OIDC-shaped stub: assertions are ``user:hmac_sha256(secret, user)``."""

    def __init__(self, secret: str):
        self._secret = secret.encode()

    def sign(self, username: str) -> str:
        mac = hmac.new(self._secret, username.encode(), hashlib.sha256).hexdigest()
        return f"{username}:{mac}"

    def authenticate(self, assertion: str) -> str:
        username, _, mac = assertion.partition(":")
        expected = hmac.new(self._secret, username.encode(), hashlib.sha256).hexdigest()
        if not mac or not hmac.compare_digest(expected, mac):
            raise errors.AuthRejected(username)
        return username


@dataclass
class Session:
    token: str
    user_id: str
    expires_at: float


class SessionManager:
    def __init__(self, store: Store, provider: IdentityProvider,
                 ttl: float = DEFAULT_SESSION_TTL, auto_provision: bool = False):
        self.store = store
        self.provider = provider
        self.ttl = ttl
        self.auto_provision = auto_provision
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def login(self, assertion: str) -> tuple[Session, User]:
        username = self.provider.authenticate(assertion)
        user = self.store.user_by_name(username)
        if user is None:
            if not self.auto_provision:
                raise errors.UnknownLocalUser(username)
            user = self.store.register_user(username, f"{username}@auto.provisioned")
        session = Session(
            token=secrets.token_hex(16),  # 128 bits
            user_id=user.user_id,
            expires_at=time.time() + self.ttl,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session, user

    def logout(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)

    def resolve(self, token: str) -> User:
        with self._lock:
            session = self._sessions.get(token)
            if session is not None and session.expires_at < time.time():
                del self._sessions[token]
                session = None
        if session is None:
            raise errors.SessionExpired("invalid or expired session")
        return self.store.get_user(session.user_id)
