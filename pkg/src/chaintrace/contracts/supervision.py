"""Supervision contract: the uniform audit trail and qualification decisions.

Audit entries arrive pre-translated by the supervision service's
anticorruption layer; the contract only sequences and deduplicates them.
Decisions are validated against the contract's own copy of submitted
qualifications, fed by QualificationSubmitted events.
"""

from __future__ import annotations

from chaintrace.contracts.base import Contract, kpath
from chaintrace.errors import ContractError
from chaintrace.ledger.chain import TxContext
from chaintrace.ledger.types import Role

TOPIC_QUAL_DECIDED = "supervision.qualification_decided"

DECISIONS = {"Approve": "Approved", "Reject": "Rejected"}


class SupervisionContract(Contract):
    name = "supervision"

    def op_ingest(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        counter = self._get(ctx, "auditn") or {"n": 0}
        seq = counter["n"]
        self._put(ctx, kpath("audit", f"{seq:010d}"), {
            "seq": seq,
            "source_context": ctx.arg_str("source"),
            "actor": ctx.arg_str("actor"),
            "action": ctx.arg_str("action"),
            "subject": ctx.arg_str("subject"),
            "logical_time": ctx.arg_uint("time"),
            "event_id": ctx.arg_str("event"),
        })
        self._put(ctx, "auditn", {"n": seq + 1})

    def op_note_qualification(self, ctx: TxContext) -> None:
        if self._already_applied(ctx, ctx.arg_str("event")):
            return
        qual_id = ctx.arg_str("qual")
        if self._get(ctx, kpath("qual", qual_id)) is None:
            self._put(ctx, kpath("qual", qual_id), {
                "owner": ctx.arg_str("owner"), "status": "Submitted",
                "decided_by": None,
            })

    def op_decide_qualification(self, ctx: TxContext) -> None:
        if ctx.role is not Role.SUPERVISOR:
            raise ContractError("NotSupervisor",
                                "only supervisor organizations may decide "
                                "qualifications")
        decision = ctx.arg_str("decision")
        if decision not in DECISIONS:
            raise ContractError("MalformedArgs",
                                "decision must be Approve or Reject")
        qual_id = ctx.arg_str("qual")
        rec = self._get(ctx, kpath("qual", qual_id))
        if rec is None:
            raise ContractError("UnknownQualification",
                                f"no submitted qualification {qual_id!r}")
        if rec["status"] != "Submitted":
            raise ContractError("AlreadyDecided",
                                f"qualification {qual_id!r} is already "
                                f"{rec['status']}")
        rec["status"] = DECISIONS[decision]
        rec["decided_by"] = ctx.submitter
        self._put(ctx, kpath("qual", qual_id), rec)
        ctx.flag_index(f"qual:{qual_id}")
        ctx.emit(TOPIC_QUAL_DECIDED, qual_id, {
            "qual": qual_id, "owner": rec["owner"],
            "decision": rec["status"], "decided_by": ctx.submitter,
            "time": str(ctx.commit_time),
        })
        ctx.set_result(status=rec["status"])
