"""Digest and canonical-serialization kernel.

All on-chain byte formats live here. Two interchangeable backends implement
the hot operations: a compiled extension (``_ckernel``, Cython) and a pure
Python fallback (``pure``). Selection happens at import; force it with
``CHAINTRACE_KERNEL=c`` or ``=py``. Outputs are bit-identical either way.

Wire format (all integers big-endian; ``str`` fields are UTF-8 with a u32
length prefix, ``bytes`` fields likewise; digests are raw 32 bytes):

    tx canonical    = u8 chain | str contract | str operation
                    | u32 nargs | nargs * (str key | bytes value)
                    | str submitter | u64 nonce
    tx_id           = sha256(tx canonical)
    committed tx    = bytes canonical | u64 commit_time | u8 role
                    | u8 status | str error_code
    tx root         = sha256(tx_id_0 | tx_id_1 | ...)
    block body      = u8 chain | u64 height | prev_hash32 | tx_root32
                    | state_digest32 | u64 timestamp | u32 ntx
                    | ntx * committed tx
    block hash      = sha256(block body)
    log record      = u32 len(body) | body | block hash32
    state digest    = sha256(prev32 | sorted writes: (str key | sha256(value)))
    genesis digest  = sha256(b"genesis" | u8 chain)
    event canonical = str topic | str key | u8 source_chain | source_tx32
                    | u32 npairs | sorted pairs: (str key | bytes value)
    event_id        = sha256(event canonical)
"""

from __future__ import annotations

import os

from chaintrace.kernel import pure

_choice = os.environ.get("CHAINTRACE_KERNEL", "auto")

if _choice == "py":
    _impl = pure
else:
    try:
        from chaintrace.kernel import _ckernel as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "c":
            raise
        _impl = pure

BACKEND: str = _impl.BACKEND

sha256 = _impl.sha256
tx_canonical = _impl.tx_canonical
committed_record = _impl.committed_record
tx_root = _impl.tx_root
seal_batch = _impl.seal_batch
state_digest_update = _impl.state_digest_update
block_body = _impl.block_body
event_canonical = _impl.event_canonical
block_struct_verify = _impl.block_struct_verify

VERIFY_OK = pure.OK
VERIFY_MALFORMED = pure.MALFORMED
VERIFY_TXROOT_MISMATCH = pure.TXROOT_MISMATCH
VERIFY_HASH_MISMATCH = pure.HASH_MISMATCH


def backend(name: str):
    """Explicit backend handle ("py" or "c") for side-by-side comparison."""
    if name == "py":
        return pure
    if name == "c":
        from chaintrace.kernel import _ckernel
        return _ckernel
    raise ValueError(f"unknown kernel backend: {name}")


def genesis_digest(chain: int) -> bytes:
    return sha256(b"genesis" + bytes([chain]))
