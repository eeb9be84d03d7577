"""Warehousing contract: production, certifications, outbound/inbound moves.

Keeps the warehousing context's own view of per-org holdings; the inventory
context maintains its stock ledger independently from the emitted events.
"""

from __future__ import annotations

from chaintrace.contracts.base import Contract, kpath, require_hex_digest
from chaintrace.domains import tokens
from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext

import json

TOPIC_PRODUCED = "warehousing.produced"
TOPIC_OUTBOUND = "warehousing.outbound"
TOPIC_INBOUND = "warehousing.inbound"
TOPIC_CONSUMED = "warehousing.consumed"
TOPIC_CERTIFIED = "warehousing.certified"


class WarehousingContract(Contract):
    name = "warehousing"
    DIGEST_ARGS = {"register_certification": frozenset({"blob_digest"})}

    # -- holdings ----------------------------------------------------------
    def _hold(self, ctx: TxContext, batch: str, org: str) -> int:
        rec = self._get(ctx, kpath("hold", batch, org))
        return rec["qty"] if rec else 0

    def _set_hold(self, ctx: TxContext, batch: str, org: str, qty: int) -> None:
        self._put(ctx, kpath("hold", batch, org), {"qty": qty})

    def _bump(self, ctx: TxContext, key: str, qty: int) -> None:
        rec = self._get(ctx, key) or {"qty": 0}
        rec["qty"] += qty
        self._put(ctx, key, rec)

    @staticmethod
    def _batch_arg(ctx: TxContext) -> str:
        batch = ctx.arg_str("batch")
        if not batch:
            raise ContractError("MalformedArgs", "batch id must be nonempty")
        return batch

    @staticmethod
    def _qty_arg(ctx: TxContext) -> int:
        qty = ctx.arg_uint("qty")
        if qty <= 0:
            raise ContractError("InvalidQuantity", "quantity must be positive")
        return qty

    # -- operations ----------------------------------------------------------
    def op_produce(self, ctx: TxContext) -> None:
        batch = self._batch_arg(ctx)
        qty = self._qty_arg(ctx)
        org = ctx.submitter
        self._set_hold(ctx, batch, org, self._hold(ctx, batch, org) + qty)
        self._bump(ctx, kpath("produced", batch), qty)
        ctx.flag_index(f"batch:{batch}")
        ctx.emit(TOPIC_PRODUCED, batch, {
            "batch": batch, "org": org, "qty": str(qty),
            "time": str(ctx.commit_time),
        })

    def op_register_certification(self, ctx: TxContext) -> None:
        cert_id = ctx.arg_str("cert")
        if not cert_id:
            raise ContractError("MalformedArgs", "cert id must be nonempty")
        if ctx.get(kpath("cert", cert_id)) is not None:
            raise ContractError("DuplicateCert",
                                f"certification {cert_id!r} already registered")
        issuer = ctx.arg_str("issuer")
        blob = require_hex_digest(ctx.arg_str("blob_digest"), "blob_digest")
        try:
            batches = json.loads(ctx.arg_str("batches"))
        except ValueError:
            raise ContractError("MalformedArgs", "batches must be JSON") from None
        if (not isinstance(batches, list) or not batches
                or not all(isinstance(b, str) and b for b in batches)):
            raise ContractError("MalformedArgs",
                                "batches must be a nonempty list of batch ids")
        self._put(ctx, kpath("cert", cert_id), {
            "issuer": issuer, "batches": sorted(set(batches)), "blob": blob,
        })
        ctx.flag_index(f"cert:{cert_id}")
        ctx.emit(TOPIC_CERTIFIED, cert_id, {
            "cert": cert_id, "issuer": issuer,
            "batches": json.dumps(sorted(set(batches))),
            "time": str(ctx.commit_time),
        })

    def op_record_outbound(self, ctx: TxContext) -> None:
        batch = self._batch_arg(ctx)
        qty = self._qty_arg(ctx)
        from_org = ctx.arg_str("from")
        to_org = ctx.arg_str("to")
        if ctx.submitter != from_org:
            raise ContractError("NotOwner",
                                "outbound must be recorded by the shipping org")
        if not to_org or to_org == from_org:
            raise ContractError("MalformedArgs", "bad destination org")
        held = self._hold(ctx, batch, from_org)
        if held < qty:
            raise ContractError(
                "InsufficientLocalStock",
                f"{from_org} holds {held} of {batch}, cannot ship {qty}")
        self._set_hold(ctx, batch, from_org, held - qty)
        tx_hex = ctx.tx_id.hex()
        token = tokens.encode(batch)
        self._put(ctx, kpath("out", tx_hex), {
            "batch": batch, "from": from_org, "to": to_org, "qty": qty,
            "token": token, "consumed": False, "height": ctx.height,
        })
        open_key = kpath("open", batch, to_org)
        open_rec = self._get(ctx, open_key) or {"txs": []}
        open_rec["txs"].append(tx_hex)
        self._put(ctx, open_key, open_rec)
        self._put(ctx, kpath("receipt", tx_hex), {
            "token": token, "batch": batch, "from": from_org, "to": to_org,
            "qty": qty, "outbound_tx": tx_hex,
        })
        ctx.flag_index(f"batch:{batch}")
        ctx.emit(TOPIC_OUTBOUND, batch, {
            "batch": batch, "from": from_org, "to": to_org, "qty": str(qty),
            "outbound_tx": tx_hex, "token": token,
            "time": str(ctx.commit_time),
        })
        ctx.set_result(outbound_tx=tx_hex, token=token)

    def op_record_inbound(self, ctx: TxContext) -> None:
        batch = self._batch_arg(ctx)
        qty = self._qty_arg(ctx)
        at_org = ctx.arg_str("at")
        from_org = ctx.arg_str("from")
        cert_id = ctx.arg_str("cert")
        if ctx.submitter != at_org:
            raise ContractError("NotOwner",
                                "inbound must be recorded by the receiving org")
        cert = self._get(ctx, kpath("cert", cert_id)) if cert_id else None
        if cert is None or batch not in cert["batches"]:
            raise ContractError(
                "PendingCertification",
                f"no registered certification covers batch {batch!r}; "
                f"update the certification information first")
        open_key = kpath("open", batch, at_org)
        open_rec = self._get(ctx, open_key) or {"txs": []}
        match_hex = None
        outbound = None
        for tx_hex in open_rec["txs"]:
            rec = self._get(ctx, kpath("out", tx_hex))
            if rec is not None and rec["from"] == from_org:
                match_hex, outbound = tx_hex, rec
                break
        if outbound is None:
            raise ContractError(
                "NoMatchingOutbound",
                f"no open outbound of {batch!r} from {from_org!r} to {at_org!r}")
        if outbound["qty"] != qty:
            raise ContractError(
                "QuantityMismatch",
                f"outbound shipped {outbound['qty']}, inbound claims {qty}")
        outbound["consumed"] = True
        self._put(ctx, kpath("out", match_hex), outbound)
        open_rec["txs"].remove(match_hex)
        self._put(ctx, open_key, open_rec)
        self._set_hold(ctx, batch, at_org, self._hold(ctx, batch, at_org) + qty)
        in_hex = ctx.tx_id.hex()
        self._put(ctx, kpath("in", in_hex), {
            "batch": batch, "at": at_org, "from": from_org, "qty": qty,
            "cert": cert_id, "outbound": match_hex,
        })
        ctx.flag_index(f"batch:{batch}")
        ctx.emit(TOPIC_INBOUND, batch, {
            "batch": batch, "from": from_org, "at": at_org, "qty": str(qty),
            "cert": cert_id, "inbound_tx": in_hex, "outbound_tx": match_hex,
            "time": str(ctx.commit_time),
        })
        ctx.set_result(inbound_tx=in_hex, outbound_tx=match_hex)

    def op_consume(self, ctx: TxContext) -> None:
        batch = self._batch_arg(ctx)
        qty = self._qty_arg(ctx)
        org = ctx.submitter
        held = self._hold(ctx, batch, org)
        if held < qty:
            raise ContractError(
                "InsufficientLocalStock",
                f"{org} holds {held} of {batch}, cannot consume {qty}")
        self._set_hold(ctx, batch, org, held - qty)
        self._bump(ctx, kpath("consumed", batch), qty)
        ctx.emit(TOPIC_CONSUMED, batch, {
            "batch": batch, "org": org, "qty": str(qty),
            "time": str(ctx.commit_time),
        })
