"""Content-addressed document store; only digests ever reach a chain.

On disk, blob ``<hex digest>`` lives at ``blobs/<hex[:2]>/<hex[2:4]>/<hex>``
(two-level fan-out). Writes are idempotent: identical content maps to the
identical path, so concurrent puts race benignly.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from chaintrace import kernel
from chaintrace.errors import ChainTraceError

DEFAULT_MAX_BLOB_BYTES = 64 * 1024 * 1024


class BlobStore:
    def __init__(self, root: Optional[Path] = None,
                 max_bytes: int = DEFAULT_MAX_BLOB_BYTES):
        self.root = Path(root) / "blobs" if root is not None else None
        self.max_bytes = max_bytes
        self._memory: dict[bytes, bytes] = {}
        self._lock = threading.Lock()
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, hexdigest: str) -> Path:
        return self.root / hexdigest[:2] / hexdigest[2:4] / hexdigest

    def put(self, content: bytes) -> bytes:
        if len(content) > self.max_bytes:
            raise ChainTraceError(
                "TooLarge",
                f"blob is {len(content)} bytes; limit {self.max_bytes}")
        digest = kernel.sha256(content)
        if self.root is None:
            with self._lock:
                self._memory[digest] = content
            return digest
        path = self._path(digest.hex())
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(content)
            tmp.replace(path)
        return digest

    def get(self, digest: bytes) -> bytes:
        if self.root is None:
            with self._lock:
                if digest not in self._memory:
                    raise ChainTraceError("NotFound",
                                          f"no blob {digest.hex()}")
                return self._memory[digest]
        path = self._path(digest.hex())
        if not path.exists():
            raise ChainTraceError("NotFound", f"no blob {digest.hex()}")
        return path.read_bytes()

    def has(self, digest: bytes) -> bool:
        if self.root is None:
            with self._lock:
                return digest in self._memory
        return self._path(digest.hex()).exists()
