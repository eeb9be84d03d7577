"""Pure-Python kernel backend (hashlib + struct).

Implements the same surface as the compiled backend; selected automatically
when the extension is unavailable or forced via CHAINTRACE_KERNEL=py.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Sequence

BACKEND = "py"

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _enc_bytes(out: list, b: bytes) -> None:
    out.append(_U32.pack(len(b)))
    out.append(b)


def _enc_str(out: list, s: str) -> None:
    _enc_bytes(out, s.encode("utf-8"))


def tx_canonical(
    chain: int,
    contract: str,
    operation: str,
    args: Sequence[tuple[str, bytes]],
    submitter: str,
    nonce: int,
) -> bytes:
    out: list = [bytes([chain])]
    _enc_str(out, contract)
    _enc_str(out, operation)
    out.append(_U32.pack(len(args)))
    for key, value in args:
        _enc_str(out, key)
        _enc_bytes(out, value)
    _enc_str(out, submitter)
    out.append(_U64.pack(nonce))
    return b"".join(out)


def committed_record(
    canonical: bytes, commit_time: int, role: int, status: int, error: str
) -> bytes:
    out: list = []
    _enc_bytes(out, canonical)
    out.append(_U64.pack(commit_time))
    out.append(bytes([role, status]))
    _enc_str(out, error)
    return b"".join(out)


def tx_root(tx_ids: Sequence[bytes]) -> bytes:
    return hashlib.sha256(b"".join(tx_ids)).digest()


def seal_batch(canonicals: Sequence[bytes]) -> tuple[list[bytes], bytes]:
    """tx_ids plus their root for a batch of canonical tx encodings."""
    ids = [hashlib.sha256(c).digest() for c in canonicals]
    return ids, tx_root(ids)


def state_digest_update(prev: bytes, writes: Sequence[tuple[str, bytes]]) -> bytes:
    h = hashlib.sha256()
    h.update(prev)
    for key, value in sorted(writes, key=lambda kv: kv[0]):
        kb = key.encode("utf-8")
        h.update(_U32.pack(len(kb)))
        h.update(kb)
        h.update(hashlib.sha256(value).digest())
    return h.digest()


def block_body(
    chain: int,
    height: int,
    prev_hash: bytes,
    txroot: bytes,
    state_digest: bytes,
    timestamp: int,
    records: Sequence[bytes],
) -> bytes:
    out: list = [
        bytes([chain]),
        _U64.pack(height),
        prev_hash,
        txroot,
        state_digest,
        _U64.pack(timestamp),
        _U32.pack(len(records)),
    ]
    out.extend(records)
    return b"".join(out)


def event_canonical(
    topic: str,
    key: str,
    source_chain: int,
    source_tx: bytes,
    payload: Sequence[tuple[str, bytes]],
) -> bytes:
    out: list = []
    _enc_str(out, topic)
    _enc_str(out, key)
    out.append(bytes([source_chain]))
    out.append(source_tx)
    items = sorted(payload, key=lambda kv: kv[0])
    out.append(_U32.pack(len(items)))
    for k, v in items:
        _enc_str(out, k)
        _enc_bytes(out, v)
    return b"".join(out)


# block_struct_verify error codes
OK = 0
MALFORMED = 1
TXROOT_MISMATCH = 2
HASH_MISMATCH = 3


def block_struct_verify(body: bytes, stored_hash: bytes) -> int:
    """Single-pass structural check of one block record.

    Recomputes every embedded tx_id, the tx root, and the block hash.
    Replay-level checks (state digest, execution status) live above this.
    """
    n = len(body)
    if n < 117:
        return MALFORMED
    txroot = body[41:73]
    (ntx,) = _U32.unpack_from(body, 113)
    pos = 117
    h = hashlib.sha256()
    for _ in range(ntx):
        if pos + 4 > n:
            return MALFORMED
        (clen,) = _U32.unpack_from(body, pos)
        pos += 4
        if pos + clen + 10 + 4 > n:
            return MALFORMED
        h.update(hashlib.sha256(body[pos : pos + clen]).digest())
        pos += clen + 10
        (elen,) = _U32.unpack_from(body, pos)
        pos += 4 + elen
        if pos > n:
            return MALFORMED
    if pos != n:
        return MALFORMED
    if h.digest() != txroot:
        return TXROOT_MISMATCH
    if hashlib.sha256(body).digest() != stored_hash:
        return HASH_MISMATCH
    return OK
