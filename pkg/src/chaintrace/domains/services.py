"""Bounded-context services: the domain-layer glue between gateway calls,
contracts, the event bus, and the blob store.

Each service holds exactly one ChainRepository scoped to its own sub-chain;
cross-context effects travel only as published events. Event handlers check
the committed idempotency marker before submitting, and the contracts
enforce the same dedupe on chain, so redeliveries are harmless.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Callable, Optional

from chaintrace.contracts.base import kpath
from chaintrace.errors import ChainTraceError
from chaintrace.eventbus import DomainEvent
from chaintrace.domains import tokens
from chaintrace.ledger.chain import PendingTx
from chaintrace.ledger.engine import LedgerEngine
from chaintrace.ledger.types import ChainId, Role

SVC_USERS = "svc#users"
SVC_WAREHOUSING = "svc#warehousing"
SVC_INVENTORY = "svc#inventory"
SVC_SUPERVISION = "svc#supervision"
SVC_TRACEABILITY = "svc#traceability"
SVC_ENTERPRISE = "svc#enterprise"


@dataclass(frozen=True)
class Principal:
    user: str
    org: str
    role: Role

    @property
    def is_supervisor(self) -> bool:
        return self.role is Role.SUPERVISOR


@dataclass(frozen=True)
class OutboundReceipt:
    token: str
    batch: str
    from_org: str
    to_org: str
    quantity: int
    outbound_tx: str

    def to_dict(self) -> dict:
        return {"token": self.token, "batch": self.batch,
                "from": self.from_org, "to": self.to_org,
                "qty": self.quantity, "outbound_tx": self.outbound_tx}


class ChainRepository:
    """The only component of a context holding a ledger handle (DDD
    repository); scoped to one chain."""

    def __init__(self, engine: LedgerEngine, chain_id: ChainId,
                 service_org: str, waiter: Callable[[PendingTx], dict]):
        self._engine = engine
        self.chain_id = chain_id
        self.service_org = service_org
        self._wait = waiter

    def submit(self, contract: str, op: str, args, submitter: str = "") -> dict:
        handle = self._engine.submit(self.chain_id, contract, op, args,
                                     submitter or self.service_org)
        return self._wait(handle)

    def submit_async(self, contract: str, op: str, args,
                     submitter: str = "") -> PendingTx:
        return self._engine.submit(self.chain_id, contract, op, args,
                                   submitter or self.service_org)

    def read(self, key: str, caller: str = "") -> Optional[bytes]:
        return self._engine.read_state(self.chain_id, key,
                                       caller or self.service_org)

    def read_json(self, key: str, caller: str = "") -> Optional[dict]:
        raw = self.read(key, caller)
        return None if raw is None else json.loads(raw)

    def scan(self, prefix: str, caller: str = "") -> list[tuple[str, bytes]]:
        return self._engine.scan_state(self.chain_id, prefix,
                                       caller or self.service_org)


def _applied(repo: ChainRepository, ns: str, event: DomainEvent) -> bool:
    key = f"{ns}/{kpath('applied', event.event_id.hex())}"
    return repo.read(key) is not None


class UserAuthorityService:
    context = "user_authority"

    def __init__(self, repo: ChainRepository):
        self.repo = repo

    @staticmethod
    def _fingerprint(credential: str) -> str:
        return hashlib.sha256(credential.encode("utf-8")).hexdigest()

    def register_user(self, user: str, org: str, role: Role,
                      credential: str) -> dict:
        return self.repo.submit("user_authority", "register_user", [
            ("user", user), ("org", org), ("role", role.label),
            ("cred_digest", self._fingerprint(credential)),
        ])

    def user_exists(self, user: str) -> bool:
        return self.repo.read(f"user_authority/{kpath('user', user)}") is not None

    def authenticate(self, user: str, credential: str) -> Principal:
        rec = self.repo.read_json(f"user_authority/{kpath('user', user)}")
        if rec is None:
            raise ChainTraceError("UnknownUser", f"no user {user!r}")
        if rec["cred"] != self._fingerprint(credential):
            raise ChainTraceError("BadCredential", "credential mismatch")
        return Principal(user, rec["org"], Role.from_label(rec["role"]))


class EnterpriseService:
    context = "enterprise"

    def __init__(self, repo: ChainRepository):
        self.repo = repo

    def register_enterprise(self, principal: Principal, org: str,
                            name: str = "") -> dict:
        return self.repo.submit("enterprise", "register_enterprise",
                                [("org", org), ("name", name or org)],
                                submitter=principal.org)

    def link_partner(self, principal: Principal, a: str, b: str) -> dict:
        return self.repo.submit("enterprise", "link_partner",
                                [("a", a), ("b", b)], submitter=principal.org)

    def partners(self, org: str, principal: Principal) -> list[str]:
        items = self.repo.scan(f"enterprise/{kpath('partner', org)}:",
                               caller=principal.org)
        prefix = f"enterprise/{kpath('partner', org)}:"
        return sorted(k[len(prefix):] for k, _ in items)

    def cooperation_record(self, outbound_tx: str,
                           principal: Principal) -> Optional[dict]:
        return self.repo.read_json(f"enterprise/{kpath('coop', outbound_tx)}",
                                   caller=principal.org)

    # event handler (group "enterprise")
    def on_outbound(self, event: DomainEvent) -> None:
        if _applied(self.repo, "enterprise", event):
            return
        p = event.payload
        self.repo.submit_async("enterprise", "note_outbound", [
            ("event", event.event_id.hex()),
            ("from", p["from"]), ("to", p["to"]),
            ("outbound_tx", p["outbound_tx"]),
        ])


class WarehousingService:
    context = "warehousing"

    def __init__(self, repo: ChainRepository):
        self.repo = repo

    def produce(self, principal: Principal, batch: str, qty: int) -> dict:
        return self.repo.submit("warehousing", "produce",
                                [("batch", batch), ("qty", qty)],
                                submitter=principal.org)

    def register_certification(self, principal: Principal, cert_id: str,
                               issuer: str, batches: list[str],
                               blob_digest: str) -> dict:
        return self.repo.submit("warehousing", "register_certification", [
            ("cert", cert_id), ("issuer", issuer),
            ("batches", json.dumps(sorted(batches))),
            ("blob_digest", blob_digest),
        ], submitter=principal.org)

    def record_outbound(self, principal: Principal, batch: str, to_org: str,
                        qty: int) -> OutboundReceipt:
        result = self.repo.submit("warehousing", "record_outbound", [
            ("batch", batch), ("from", principal.org), ("to", to_org),
            ("qty", qty),
        ], submitter=principal.org)
        return OutboundReceipt(
            token=result["token"], batch=batch, from_org=principal.org,
            to_org=to_org, quantity=qty, outbound_tx=result["outbound_tx"])

    def record_inbound(self, principal: Principal, batch: str, from_org: str,
                       qty: int, cert_id: str) -> dict:
        return self.repo.submit("warehousing", "record_inbound", [
            ("batch", batch), ("at", principal.org), ("from", from_org),
            ("qty", qty), ("cert", cert_id),
        ], submitter=principal.org)

    def inbound_by_scan(self, principal: Principal, rendered_token: str,
                        cert_id: str) -> dict:
        """The Fig.-style scan flow: token -> matching receipt -> inbound."""
        batch = tokens.decode(rendered_token)
        at_org = principal.org
        open_rec = self.repo.read_json(
            f"warehousing/{kpath('open', batch, at_org)}", caller=at_org)
        if not open_rec or not open_rec["txs"]:
            raise ChainTraceError(
                "NoMatchingOutbound",
                f"no open outbound of {batch!r} addressed to {at_org!r}")
        outbound = self.repo.read_json(
            f"warehousing/{kpath('out', open_rec['txs'][0])}", caller=at_org)
        return self.record_inbound(principal, batch, outbound["from"],
                                   outbound["qty"], cert_id)

    def consume(self, principal: Principal, batch: str, qty: int) -> dict:
        return self.repo.submit("warehousing", "consume",
                                [("batch", batch), ("qty", qty)],
                                submitter=principal.org)

    def receipt(self, outbound_tx: str, principal: Principal) -> OutboundReceipt:
        rec = self.repo.read_json(
            f"warehousing/{kpath('receipt', outbound_tx)}",
            caller=principal.org)
        if rec is None:
            raise ChainTraceError("UnknownReceipt",
                                  f"no receipt for outbound {outbound_tx!r}")
        return OutboundReceipt(
            token=rec["token"], batch=rec["batch"], from_org=rec["from"],
            to_org=rec["to"], quantity=rec["qty"],
            outbound_tx=rec["outbound_tx"])

    def reissue_token(self, batch: str) -> str:
        """Fig. 5 damaged-QR branch: re-encode the product."""
        return tokens.encode(batch)


class NotReadyYet(Exception):
    """Delivery postponed: a causally-earlier event has not been applied yet.

    Raised inside event handlers before anything is submitted; the bus
    treats it as a failed delivery and redelivers, by which time the
    dependency (on another topic) has usually landed.
    """


class InventoryService:
    context = "inventory"

    def __init__(self, repo: ChainRepository):
        self.repo = repo

    def submit_qualification(self, principal: Principal, qual_id: str,
                             blob_digest: str) -> dict:
        return self.repo.submit("inventory", "submit_qualification",
                                [("qual", qual_id), ("blob_digest", blob_digest)],
                                submitter=principal.org)

    def qualification(self, qual_id: str, principal: Principal) -> Optional[dict]:
        return self.repo.read_json(f"inventory/{kpath('qual', qual_id)}",
                                   caller=principal.org)

    def qualification_view(self, qual_id: str, principal: Principal) -> dict:
        rec = self.qualification(qual_id, principal)
        if rec is None:
            raise ChainTraceError("UnknownQualification",
                                  f"no qualification {qual_id!r}")
        rec["qual"] = qual_id
        return rec

    def query_stock(self, location: str, principal: Principal) -> list[dict]:
        # registration on the inventory chain is checked first (AccessDenied),
        # then the qualification gate (NotApproved), then data access
        gate = self.repo.read_json(f"inventory/{kpath('gate', principal.org)}",
                                   caller=principal.org)
        if not principal.is_supervisor and not (gate and gate.get("approved")):
            raise ChainTraceError(
                "NotApproved",
                f"{principal.org} has no approved warehousing qualification")
        items = self.repo.scan("inventory/stock:", caller=principal.org)
        out = []
        for _, raw in items:
            rec = json.loads(raw)
            if rec["org"] == location:
                out.append(rec)
        out.sort(key=lambda r: (r["batch"], r["status"]))
        return out

    def stock_cells(self, principal: Principal) -> list[dict]:
        """All stock cells (supervisor conservation checks)."""
        if not principal.is_supervisor:
            raise ChainTraceError("AccessDenied",
                                  "full stock scan is supervisor-only")
        return [json.loads(raw) for _, raw in
                self.repo.scan("inventory/stock:", caller=principal.org)]

    # event handlers (group "inventory")
    def _apply(self, op: str, event: DomainEvent, args: list) -> None:
        if _applied(self.repo, "inventory", event):
            return
        self.repo.submit_async("inventory", op,
                               [("event", event.event_id.hex())] + args)

    def _committed_qty(self, batch: str, org: str, status: str) -> int:
        rec = self.repo.read_json(
            f"inventory/{kpath('stock', batch, org, status)}")
        return rec["qty"] if rec else 0

    def on_produced(self, event: DomainEvent) -> None:
        p = event.payload
        self._apply("apply_produced", event, [
            ("batch", p["batch"]), ("org", p["org"]), ("qty", p["qty"])])

    def on_outbound(self, event: DomainEvent) -> None:
        if _applied(self.repo, "inventory", event):
            return
        p = event.payload
        # the produce/inbound that funded this shipment may still be in
        # flight on another topic; wait for it rather than ack-and-fail
        if self._committed_qty(p["batch"], p["from"], "InStock") < int(p["qty"]):
            raise NotReadyYet(f"stock for {p['batch']} at {p['from']} not applied")
        self._apply("apply_outbound", event, [
            ("batch", p["batch"]), ("from", p["from"]), ("to", p["to"]),
            ("qty", p["qty"])])

    def on_inbound(self, event: DomainEvent) -> None:
        if _applied(self.repo, "inventory", event):
            return
        p = event.payload
        if self._committed_qty(p["batch"], p["at"], "InTransit") < int(p["qty"]):
            raise NotReadyYet(f"transfer of {p['batch']} to {p['at']} not applied")
        self._apply("apply_inbound", event, [
            ("batch", p["batch"]), ("at", p["at"]), ("qty", p["qty"])])

    def on_consumed(self, event: DomainEvent) -> None:
        if _applied(self.repo, "inventory", event):
            return
        p = event.payload
        if self._committed_qty(p["batch"], p["org"], "InStock") < int(p["qty"]):
            raise NotReadyYet(f"stock for {p['batch']} at {p['org']} not applied")
        self._apply("apply_consumed", event, [
            ("batch", p["batch"]), ("org", p["org"]), ("qty", p["qty"])])

    def on_decision(self, event: DomainEvent) -> None:
        p = event.payload
        self._apply("apply_decision", event, [
            ("qual", p["qual"]), ("decision", p["decision"]),
            ("decided_by", p["decided_by"])])


class SupervisionService:
    """Supervision context: audits every cross-context event through its
    anticorruption mapping and owns qualification decisions."""

    context = "supervision"

    def __init__(self, repo: ChainRepository, mapping: dict[str, dict]):
        self.repo = repo
        self.mapping = mapping
        self.skipped_events = 0

    def decide_qualification(self, principal: Principal, qual_id: str,
                             decision: str) -> dict:
        return self.repo.submit("supervision", "decide_qualification",
                                [("qual", qual_id), ("decision", decision)],
                                submitter=principal.org)

    def pending_qualifications(self, principal: Principal) -> list[dict]:
        items = self.repo.scan("supervision/qual:", caller=principal.org)
        out = []
        for key, raw in items:
            rec = json.loads(raw)
            if rec["status"] == "Submitted":
                rec["qual"] = key.rsplit(":", 1)[-1]
                out.append(rec)
        return out

    def audit_entries(self, principal: Principal) -> list[dict]:
        return [json.loads(raw) for _, raw in
                self.repo.scan("supervision/audit:", caller=principal.org)]

    def audit_count(self, principal: Principal) -> int:
        rec = self.repo.read_json("supervision/auditn", caller=principal.org)
        return rec["n"] if rec else 0

    # event handler (group "supervision", every topic)
    def on_event(self, event: DomainEvent) -> None:
        rule = self.mapping.get(event.topic)
        if rule is None:
            self.skipped_events += 1
            return
        if _applied(self.repo, "supervision", event):
            return
        p = event.payload
        self.repo.submit_async("supervision", "ingest", [
            ("event", event.event_id.hex()),
            ("source", event.topic),
            ("actor", p.get(rule.get("actor", ""), "")),
            ("action", rule["action"]),
            ("subject", p.get(rule.get("subject", ""), event.key)),
            ("time", p.get("time", "0")),
        ])
        if event.topic == "inventory.qualification_submitted":
            self.repo.submit_async("supervision", "note_qualification", [
                ("event", "note-" + event.event_id.hex()),
                ("qual", p["qual"]), ("owner", p["owner"]),
            ])


class TraceabilityService:
    context = "traceability"

    def __init__(self, repo: ChainRepository):
        self.repo = repo

    def trace(self, rendered_token: str,
              principal: Optional[Principal] = None) -> list[dict]:
        batch = tokens.decode(rendered_token)
        return self.trace_batch(batch, principal)

    def trace_batch(self, batch: str,
                    principal: Optional[Principal] = None) -> list[dict]:
        counter = self.repo.read_json(f"traceability/{kpath('hopn', batch)}")
        if counter is None:
            raise ChainTraceError("UnknownBatch",
                                  f"no trace route for batch {batch!r}")
        hops = []
        for seq in range(counter["n"]):
            rec = self.repo.read_json(
                f"traceability/{kpath('hop', batch, f'{seq:010d}')}")
            view = {k: rec[k] for k in
                    ("batch", "seq", "from", "to", "qty", "time")}
            if principal is not None and (
                    principal.is_supervisor
                    or principal.org in (rec["from"], rec["to"])):
                view["private"] = rec["private"]
            hops.append(view)
        return hops

    # event handlers (group "traceability")
    def on_outbound(self, event: DomainEvent) -> None:
        if _applied(self.repo, "traceability", event):
            return
        p = event.payload
        self.repo.submit_async("traceability", "note_outbound", [
            ("event", event.event_id.hex()),
            ("batch", p["batch"]), ("from", p["from"]), ("to", p["to"]),
            ("qty", p["qty"]), ("outbound_tx", p["outbound_tx"]),
            ("token", p["token"]), ("time", p["time"]),
        ])

    def on_inbound(self, event: DomainEvent) -> None:
        if _applied(self.repo, "traceability", event):
            return
        p = event.payload
        self.repo.submit_async("traceability", "append_hop", [
            ("event", event.event_id.hex()),
            ("batch", p["batch"]), ("from", p["from"]), ("at", p["at"]),
            ("qty", p["qty"]), ("cert", p["cert"]),
            ("outbound_tx", p["outbound_tx"]),
            ("inbound_tx", p["inbound_tx"]), ("time", p["time"]),
        ])
