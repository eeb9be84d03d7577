"""Server-side session tokens: random 128-bit values, shared across gateway
instances so any replica answers any request."""

from __future__ import annotations

import secrets
import threading
import time

from chaintrace.domains.services import Principal
from chaintrace.errors import ChainTraceError


class SessionStore:
    def __init__(self, ttl_seconds: float = 8 * 3600.0):
        self.ttl = ttl_seconds
        self._sessions: dict[str, tuple[Principal, float]] = {}
        self._lock = threading.Lock()

    def issue(self, principal: Principal) -> str:
        token = secrets.token_hex(16)
        with self._lock:
            self._sessions[token] = (principal, time.time() + self.ttl)
        return token

    def lookup(self, token: str) -> Principal:
        with self._lock:
            entry = self._sessions.get(token)
            if entry is None:
                raise ChainTraceError("Unauthenticated", "unknown session token")
            principal, expiry = entry
            if time.time() > expiry:
                del self._sessions[token]
                raise ChainTraceError("Unauthenticated", "session expired")
            return principal

    def revoke(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)
