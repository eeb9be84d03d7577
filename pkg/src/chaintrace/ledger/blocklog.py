"""Append-only block logs: one file per chain, plus an in-memory mode.

Record framing: u32 length of the block body, the body, then the 32-byte
block hash. Storing the hash per record pins any single-byte tamper to the
exact record it occurred in.
"""

from __future__ import annotations

import struct
from pathlib import Path

_U32 = struct.Struct(">I")


class LogCorruption(Exception):
    def __init__(self, index: int, reason: str):
        super().__init__(f"record {index}: {reason}")
        self.index = index
        self.reason = reason


def read_records(path: Path) -> list[tuple[bytes, bytes]]:
    """Parse a block log file into (body, stored hash) pairs.

    Raises LogCorruption with the record index when the framing itself is
    damaged; content-level damage is the verifier's job.
    """
    data = Path(path).read_bytes()
    records: list[tuple[bytes, bytes]] = []
    pos = 0
    idx = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise LogCorruption(idx, "truncated length prefix")
        (n,) = _U32.unpack_from(data, pos)
        pos += 4
        if pos + n + 32 > len(data):
            raise LogCorruption(idx, "truncated record")
        records.append((data[pos : pos + n], data[pos + n : pos + n + 32]))
        pos += n + 32
        idx += 1
    return records


class MemoryBlockLog:
    def __init__(self):
        self._records: list[tuple[bytes, bytes]] = []

    def append(self, body: bytes, block_hash: bytes) -> None:
        self._records.append((body, block_hash))

    def records(self) -> list[tuple[bytes, bytes]]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def close(self) -> None:
        pass

    # test hook: in-place tampering, mirroring a hex edit of a log file
    def mutate(self, index: int, offset: int, xor: int) -> None:
        body, h = self._records[index]
        buf = bytearray(body + h)
        buf[offset] ^= xor
        self._records[index] = (bytes(buf[:-32]), bytes(buf[-32:]))


class FileBlockLog:
    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._records = self._load()
        self._fh = open(self.path, "ab")

    def _load(self) -> list[tuple[bytes, bytes]]:
        if not self.path.exists():
            return []
        return read_records(self.path)

    def append(self, body: bytes, block_hash: bytes) -> None:
        self._fh.write(_U32.pack(len(body)))
        self._fh.write(body)
        self._fh.write(block_hash)
        self._fh.flush()
        self._records.append((body, block_hash))

    def records(self) -> list[tuple[bytes, bytes]]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def close(self) -> None:
        self._fh.close()
