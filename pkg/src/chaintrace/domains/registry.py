"""In-process service registration and discovery."""

from __future__ import annotations

import threading

from chaintrace.errors import ChainTraceError


class ServiceRegistry:
    def __init__(self):
        self._services: dict[str, object] = {}
        self._health: dict[str, bool] = {}
        self._lock = threading.Lock()

    def register(self, name: str, service: object) -> None:
        with self._lock:
            if name in self._services:
                raise ChainTraceError("DuplicateService",
                                      f"service {name!r} already registered")
            self._services[name] = service
            self._health[name] = True

    def resolve(self, name: str) -> object:
        with self._lock:
            try:
                return self._services[name]
            except KeyError:
                raise ChainTraceError("UnknownService",
                                      f"no service named {name!r}") from None

    def set_health(self, name: str, healthy: bool) -> None:
        with self._lock:
            if name not in self._services:
                raise ChainTraceError("UnknownService",
                                      f"no service named {name!r}")
            self._health[name] = healthy

    def healthy(self, name: str) -> bool:
        with self._lock:
            if name not in self._services:
                raise ChainTraceError("UnknownService",
                                      f"no service named {name!r}")
            return self._health[name]

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._services)
