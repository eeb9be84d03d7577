"""Inventory contract: stock cells keyed (batch, location, status), the
qualification gate, and idempotent application of warehousing events."""

from __future__ import annotations

from chaintrace.contracts.base import Contract, kpath, require_hex_digest
from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext

IN_STOCK = "InStock"
IN_TRANSIT = "InTransit"
DELIVERED = "Delivered"

TOPIC_QUAL_SUBMITTED = "inventory.qualification_submitted"

QUAL_SUBMITTED = "Submitted"
QUAL_APPROVED = "Approved"
QUAL_REJECTED = "Rejected"


class InventoryContract(Contract):
    name = "inventory"
    DIGEST_ARGS = {"submit_qualification": frozenset({"blob_digest"})}

    def _stock(self, ctx: TxContext, batch: str, org: str, status: str) -> int:
        rec = self._get(ctx, kpath("stock", batch, org, status))
        return rec["qty"] if rec else 0

    def _set_stock(self, ctx: TxContext, batch: str, org: str, status: str,
                   qty: int) -> None:
        self._put(ctx, kpath("stock", batch, org, status),
                  {"batch": batch, "org": org, "status": status, "qty": qty})

    def _bump(self, ctx: TxContext, key: str, qty: int) -> None:
        rec = self._get(ctx, key) or {"qty": 0}
        rec["qty"] += qty
        self._put(ctx, key, rec)

    # -- qualifications ------------------------------------------------------
    def op_submit_qualification(self, ctx: TxContext) -> None:
        qual_id = ctx.arg_str("qual")
        if not qual_id:
            raise ContractError("MalformedArgs", "qual id must be nonempty")
        blob = require_hex_digest(ctx.arg_str("blob_digest"), "blob_digest")
        if ctx.get(kpath("qual", qual_id)) is not None:
            raise ContractError("DuplicateQualification",
                                f"qualification {qual_id!r} already submitted")
        owner = ctx.submitter
        self._put(ctx, kpath("qual", qual_id), {
            "owner": owner, "blob": blob, "status": QUAL_SUBMITTED,
            "decided_by": None,
        })
        ctx.flag_index(f"qual:{qual_id}")
        ctx.emit(TOPIC_QUAL_SUBMITTED, qual_id, {
            "qual": qual_id, "owner": owner, "blob": blob,
            "time": str(ctx.commit_time),
        })

    def op_apply_decision(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        qual_id = ctx.arg_str("qual")
        decision = ctx.arg_str("decision")
        rec = self._get(ctx, kpath("qual", qual_id))
        if rec is None:
            raise ContractError("UnknownQualification",
                                f"no qualification {qual_id!r}")
        if rec["status"] != QUAL_SUBMITTED:
            # a later decision event can never overwrite the first transition
            ctx.set_result(duplicate="true")
            return
        rec["status"] = decision
        rec["decided_by"] = ctx.arg_str("decided_by")
        self._put(ctx, kpath("qual", qual_id), rec)
        if decision == QUAL_APPROVED:
            self._put(ctx, kpath("gate", rec["owner"]), {"approved": True})

    # -- event application ------------------------------------------------------
    def op_apply_produced(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        batch = ctx.arg_str("batch")
        org = ctx.arg_str("org")
        qty = ctx.arg_uint("qty")
        self._set_stock(ctx, batch, org, IN_STOCK,
                        self._stock(ctx, batch, org, IN_STOCK) + qty)
        self._bump(ctx, kpath("produced", batch), qty)

    def op_apply_outbound(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        batch = ctx.arg_str("batch")
        from_org = ctx.arg_str("from")
        to_org = ctx.arg_str("to")
        qty = ctx.arg_uint("qty")
        have = self._stock(ctx, batch, from_org, IN_STOCK)
        if have < qty:
            raise ContractError(
                "InsufficientStock",
                f"{from_org} has {have} of {batch} in stock, cannot move {qty}")
        self._set_stock(ctx, batch, from_org, IN_STOCK, have - qty)
        self._set_stock(ctx, batch, to_org, IN_TRANSIT,
                        self._stock(ctx, batch, to_org, IN_TRANSIT) + qty)

    def op_apply_inbound(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        batch = ctx.arg_str("batch")
        at_org = ctx.arg_str("at")
        qty = ctx.arg_uint("qty")
        transiting = self._stock(ctx, batch, at_org, IN_TRANSIT)
        if transiting < qty:
            raise ContractError(
                "NoInTransitRecord",
                f"{at_org} has {transiting} of {batch} in transit, "
                f"inbound claims {qty}")
        self._set_stock(ctx, batch, at_org, IN_TRANSIT, transiting - qty)
        self._set_stock(ctx, batch, at_org, IN_STOCK,
                        self._stock(ctx, batch, at_org, IN_STOCK) + qty)

    def op_apply_consumed(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        batch = ctx.arg_str("batch")
        org = ctx.arg_str("org")
        qty = ctx.arg_uint("qty")
        have = self._stock(ctx, batch, org, IN_STOCK)
        if have < qty:
            raise ContractError(
                "InsufficientStock",
                f"{org} has {have} of {batch} in stock, cannot consume {qty}")
        self._set_stock(ctx, batch, org, IN_STOCK, have - qty)
        self._set_stock(ctx, batch, org, DELIVERED,
                        self._stock(ctx, batch, org, DELIVERED) + qty)
        self._bump(ctx, kpath("consumed", batch), qty)
