"""Trace token codec.

The rendered token is the payload a deployment would print as a QR code:

    TT1-<unpadded base32 of the batch id>-<8 lowercase hex chars>

The hex tail is the first 4 bytes of sha256(batch id), so any single
character corruption is caught with probability ~1 - 2^-32. Decoding is
strict (uppercase base32, lowercase hex, no padding) so that case flips are
rejected rather than silently normalized.
"""

from __future__ import annotations

import base64
import hashlib
import re

from chaintrace.errors import ChainTraceError

PREFIX = "TT1"
MAX_BATCH_ID_LEN = 128

_TOKEN_RE = re.compile(r"^TT1-([A-Z2-7]+)-([0-9a-f]{8})$")


def _checksum(batch_utf8: bytes) -> str:
    return hashlib.sha256(batch_utf8).digest()[:4].hex()


def encode(batch_id: str) -> str:
    if not batch_id or len(batch_id) > MAX_BATCH_ID_LEN:
        raise ChainTraceError("BadBatchId",
                              "batch id must be 1..128 characters")
    raw = batch_id.encode("utf-8")
    b32 = base64.b32encode(raw).decode("ascii").rstrip("=")
    return f"{PREFIX}-{b32}-{_checksum(raw)}"


def decode(rendered: str) -> str:
    m = _TOKEN_RE.match(rendered)
    if m is None:
        raise ChainTraceError("InvalidToken", "malformed trace token")
    b32, check = m.groups()
    pad = "=" * (-len(b32) % 8)
    try:
        raw = base64.b32decode(b32 + pad)
    except Exception:
        raise ChainTraceError("InvalidToken", "invalid base32 section") from None
    # reject non-canonical trailing characters (slack-bit malleability)
    if base64.b32encode(raw).decode("ascii").rstrip("=") != b32:
        raise ChainTraceError("InvalidToken", "non-canonical encoding")
    if _checksum(raw) != check:
        raise ChainTraceError("InvalidToken", "checksum mismatch")
    try:
        batch_id = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ChainTraceError("InvalidToken", "batch id is not utf-8") from None
    if not batch_id or len(batch_id) > MAX_BATCH_ID_LEN:
        raise ChainTraceError("InvalidToken", "decoded batch id out of range")
    return batch_id
