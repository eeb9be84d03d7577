"""Traceability contract: pairs outbound/inbound legs into route hops.

Event delivery across the two warehousing topics carries no relative order,
so either leg may arrive first; the unmatched leg parks in an on-chain
pending map keyed by the outbound tx. Hop sequence numbers per batch are
gapless by construction (a single counter key per batch).
"""

from __future__ import annotations

from chaintrace.contracts.base import Contract, kpath
from chaintrace.ledger.chain import TxContext


class TraceabilityContract(Contract):
    name = "traceability"

    def _append_hop(self, ctx: TxContext, out_leg: dict, in_leg: dict) -> int:
        batch = in_leg["batch"]
        counter = self._get(ctx, kpath("hopn", batch)) or {"n": 0}
        seq = counter["n"]
        self._put(ctx, kpath("hop", batch, f"{seq:010d}"), {
            "batch": batch,
            "seq": seq,
            "from": in_leg["from"],
            "to": in_leg["at"],
            "qty": in_leg["qty"],
            "time": in_leg["time"],
            "private": {
                "cert": in_leg["cert"],
                "token": out_leg["token"],
                "outbound_tx": in_leg["outbound_tx"],
                "inbound_tx": in_leg["inbound_tx"],
            },
        })
        self._put(ctx, kpath("hopn", batch), {"n": seq + 1})
        ctx.flag_index(f"batch:{batch}")
        ctx.set_result(seq=str(seq))
        return seq

    def _pair(self, ctx: TxContext, outbound_tx: str) -> dict:
        return (self._get(ctx, kpath("pair", outbound_tx))
                or {"out": None, "in": None, "done": False})

    def op_note_outbound(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        outbound_tx = ctx.arg_str("outbound_tx")
        pair = self._pair(ctx, outbound_tx)
        if pair["done"]:
            ctx.set_result(duplicate="true")
            return
        pair["out"] = {
            "batch": ctx.arg_str("batch"),
            "from": ctx.arg_str("from"),
            "to": ctx.arg_str("to"),
            "qty": int(ctx.arg_uint("qty")),
            "token": ctx.arg_str("token"),
            "time": int(ctx.arg_uint("time")),
        }
        if pair["in"] is not None:
            pair["done"] = True
            self._append_hop(ctx, pair["out"], pair["in"])
        self._put(ctx, kpath("pair", outbound_tx), pair)

    def op_append_hop(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        outbound_tx = ctx.arg_str("outbound_tx")
        pair = self._pair(ctx, outbound_tx)
        if pair["done"]:
            ctx.set_result(duplicate="true")
            return
        pair["in"] = {
            "batch": ctx.arg_str("batch"),
            "from": ctx.arg_str("from"),
            "at": ctx.arg_str("at"),
            "qty": int(ctx.arg_uint("qty")),
            "cert": ctx.arg_str("cert"),
            "outbound_tx": outbound_tx,
            "inbound_tx": ctx.arg_str("inbound_tx"),
            "time": int(ctx.arg_uint("time")),
        }
        if pair["out"] is not None:
            pair["done"] = True
            self._append_hop(ctx, pair["out"], pair["in"])
        else:
            # inbound outran its outbound across topics: park it
            ctx.set_result(parked="OrphanInbound")
        self._put(ctx, kpath("pair", outbound_tx), pair)
