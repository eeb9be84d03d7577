"""Contract base: op dispatch, JSON record helpers, digest-arg declarations.

Contracts are pure state machines over their own world-state namespace;
every handler is a function of (state view, tx context) only. Anything an
operation needs beyond its args must already be on chain.
"""

from __future__ import annotations

import json
from urllib.parse import quote

from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext

HEX_DIGEST_LEN = 64  # 32 bytes rendered as lowercase hex


def kpath(*parts: str) -> str:
    """Collision-free state key from components (':' is the separator)."""
    return ":".join(quote(p, safe="") for p in parts)


def dump_record(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_record(raw: bytes) -> dict:
    return json.loads(raw.decode("utf-8"))


def require_hex_digest(value: str, what: str) -> str:
    if len(value) != HEX_DIGEST_LEN:
        raise ContractError("MalformedDigest",
                            f"{what} must be {HEX_DIGEST_LEN} hex chars")
    try:
        bytes.fromhex(value)
    except ValueError:
        raise ContractError("MalformedDigest", f"{what} is not hex") from None
    if value != value.lower():
        raise ContractError("MalformedDigest", f"{what} must be lowercase hex")
    return value


class Contract:
    name: str = ""
    DIGEST_ARGS: dict[str, frozenset[str]] = {}

    def digest_args(self, op: str) -> frozenset[str]:
        return self.DIGEST_ARGS.get(op, frozenset())

    def execute(self, op: str, ctx: TxContext) -> None:
        handler = getattr(self, f"op_{op}", None)
        if handler is None:
            raise ContractError("MalformedArgs",
                                f"{self.name} has no operation {op!r}")
        handler(ctx)

    # -- shared record plumbing -------------------------------------------
    def _get(self, ctx: TxContext, key: str) -> dict | None:
        raw = ctx.get(key)
        return None if raw is None else load_record(raw)

    def _put(self, ctx: TxContext, key: str, obj: dict) -> None:
        ctx.put(key, dump_record(obj))

    def _already_applied(self, ctx: TxContext, event_id: str) -> bool:
        """Event idempotency: duplicate deliveries are a no-op success."""
        key = kpath("applied", event_id)
        if ctx.get(key) is not None:
            ctx.set_result(duplicate="true")
            return True
        ctx.put(key, b"{}")
        return False
