"""Main-chain anchor contract: sub-chain checkpoints and index records.

The main chain holds only this metadata; business payloads never land here.
"""

from __future__ import annotations

import json

from chaintrace.contracts.base import Contract, kpath, require_hex_digest
from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext

SUB_CHAIN_LABELS = frozenset({
    "UserAuthority", "Enterprise", "Warehousing", "Inventory",
    "Supervision", "Traceability",
})


class AnchorContract(Contract):
    name = "anchor"

    def op_anchor(self, ctx: TxContext) -> None:
        sub = ctx.arg_str("sub")
        if sub not in SUB_CHAIN_LABELS:
            raise ContractError("BadAnchor", f"not an anchorable chain: {sub!r}")
        height = ctx.arg_uint("height")
        block_hash = require_hex_digest(ctx.arg_str("hash"), "block hash")
        tip = self._get(ctx, kpath("tip", sub))
        last = tip["height"] if tip else 0
        if height <= last:
            raise ContractError(
                "BadAnchor",
                f"anchored height must increase ({height} <= {last})")
        self._put(ctx, kpath("tip", sub), {"height": height, "hash": block_hash})
        self._put(ctx, kpath("rec", sub, f"{height:010d}"),
                  {"height": height, "hash": block_hash})
        try:
            entries = json.loads(ctx.arg_str("entries"))
        except ValueError:
            raise ContractError("MalformedArgs", "entries must be JSON") from None
        if not isinstance(entries, list):
            raise ContractError("MalformedArgs", "entries must be a list")
        for entry in entries:
            key = entry["key"]
            counter_key = kpath("idxn", key)
            counter = self._get(ctx, counter_key) or {"n": 0}
            n = counter["n"]
            self._put(ctx, kpath("idx", key, f"{n:010d}"), {
                "sub": sub, "tx_id": entry["tx_id"],
                "height": int(entry["height"]),
            })
            self._put(ctx, counter_key, {"n": n + 1})
        ctx.set_result(anchored=str(height), indexed=str(len(entries)))
