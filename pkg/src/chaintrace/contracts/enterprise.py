"""Enterprise contract: company records, partnership edges, cooperation log.

Conformist context: org and user identifiers are stored exactly as issued
elsewhere, no translation. Outbound shipments to non-partners are recorded
with a warning flag, never rejected.
"""

from __future__ import annotations

from chaintrace.contracts.base import Contract, kpath
from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext

TOPIC_REGISTERED = "enterprise.registered"
TOPIC_PARTNER_LINKED = "enterprise.partner_linked"


class EnterpriseContract(Contract):
    name = "enterprise"

    def op_register_enterprise(self, ctx: TxContext) -> None:
        org = ctx.arg_str("org")
        if not org:
            raise ContractError("MalformedArgs", "org id must be nonempty")
        if ctx.get(kpath("ent", org)) is not None:
            raise ContractError("DuplicateEnterprise",
                                f"enterprise {org!r} already registered")
        self._put(ctx, kpath("ent", org), {
            "org": org, "name": ctx.arg_str("name") if ctx.has_arg("name") else org,
        })
        ctx.emit(TOPIC_REGISTERED, org, {
            "org": org, "time": str(ctx.commit_time),
        })

    def op_link_partner(self, ctx: TxContext) -> None:
        a = ctx.arg_str("a")
        b = ctx.arg_str("b")
        if a == b:
            raise ContractError("MalformedArgs", "cannot partner with itself")
        for org in (a, b):
            if self._get(ctx, kpath("ent", org)) is None:
                raise ContractError("UnknownOrg",
                                    f"enterprise {org!r} is not registered")
        self._put(ctx, kpath("partner", a, b), {"linked": True})
        self._put(ctx, kpath("partner", b, a), {"linked": True})
        ctx.emit(TOPIC_PARTNER_LINKED, a, {
            "a": a, "b": b, "time": str(ctx.commit_time),
        })

    def op_note_outbound(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        from_org = ctx.arg_str("from")
        to_org = ctx.arg_str("to")
        partnered = ctx.get(kpath("partner", from_org, to_org)) is not None
        self._put(ctx, kpath("coop", ctx.arg_str("outbound_tx")), {
            "from": from_org, "to": to_org, "partner": partnered,
            "non_partner_warning": not partnered,
        })
