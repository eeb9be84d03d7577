"""Per-domain contract state machines, exercised one operation at a time."""

import json

import pytest

from chaintrace.errors import ContractError
from chaintrace.ledger.types import ChainId, Role

from conftest import ContractHarness


def wh() -> ContractHarness:
    return ContractHarness("warehousing", chain_id=ChainId.WAREHOUSING)


def certify(h, cert="C1", batches=("B1",), issuer="bureau"):
    return h.call("warehousing", "register_certification", [
        ("cert", cert), ("issuer", issuer),
        ("batches", json.dumps(sorted(batches))), ("blob_digest", "ab" * 32),
    ])


# -- warehousing ------------------------------------------------------------

class TestWarehousingOutbound:
    def test_ship_writes_record_and_event_and_decrements_view(self):
        h = wh()
        h.call("warehousing", "produce", [("batch", "B1"), ("qty", 100)])
        result = h.call("warehousing", "record_outbound",
                        [("batch", "B1"), ("from", "acme"),
                         ("to", "nord"), ("qty", 40)])
        assert "token" in result and result["token"].startswith("TT1-")
        hold = json.loads(h.get("warehousing/hold:B1:acme"))
        assert hold["qty"] == 60
        topics = [e.topic for e in h.events]
        assert "warehousing.outbound" in topics

    def test_overdraw_rejected(self):
        h = wh()
        h.call("warehousing", "produce", [("batch", "B1"), ("qty", 100)])
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_outbound",
                   [("batch", "B1"), ("from", "acme"), ("to", "nord"),
                    ("qty", 101)])
        assert err.value.code == "InsufficientLocalStock"

    def test_caller_must_be_shipping_org(self):
        h = wh()
        h.call("warehousing", "produce", [("batch", "B1"), ("qty", 100)])
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_outbound",
                   [("batch", "B1"), ("from", "acme"), ("to", "nord"),
                    ("qty", 1)], submitter="mallory")
        assert err.value.code == "NotOwner"


class TestWarehousingInbound:
    def _shipped(self):
        h = wh()
        certify(h)
        h.call("warehousing", "produce", [("batch", "B1"), ("qty", 100)])
        out = h.call("warehousing", "record_outbound",
                     [("batch", "B1"), ("from", "acme"), ("to", "nord"),
                      ("qty", 40)])
        return h, out

    def test_matching_inbound_succeeds_and_emits(self):
        h, out = self._shipped()
        result = h.call("warehousing", "record_inbound",
                        [("batch", "B1"), ("at", "nord"), ("from", "acme"),
                         ("qty", 40), ("cert", "C1")], submitter="nord")
        assert result["outbound_tx"] == out["outbound_tx"]
        assert json.loads(h.get("warehousing/hold:B1:nord"))["qty"] == 40
        assert "warehousing.inbound" in [e.topic for e in h.events]

    def test_quantity_mismatch(self):
        h, _ = self._shipped()
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_inbound",
                   [("batch", "B1"), ("at", "nord"), ("from", "acme"),
                    ("qty", 50), ("cert", "C1")], submitter="nord")
        assert err.value.code == "QuantityMismatch"

    def test_unregistered_cert_pends(self):
        h, _ = self._shipped()
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_inbound",
                   [("batch", "B1"), ("at", "nord"), ("from", "acme"),
                    ("qty", 40), ("cert", "NOPE")], submitter="nord")
        assert err.value.code == "PendingCertification"

    def test_no_matching_outbound(self):
        h, _ = self._shipped()
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_inbound",
                   [("batch", "B1"), ("at", "nord"), ("from", "other"),
                    ("qty", 40), ("cert", "C1")], submitter="nord")
        assert err.value.code == "NoMatchingOutbound"

    def test_outbound_not_consumed_twice(self):
        h, _ = self._shipped()
        h.call("warehousing", "record_inbound",
               [("batch", "B1"), ("at", "nord"), ("from", "acme"),
                ("qty", 40), ("cert", "C1")], submitter="nord")
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_inbound",
                   [("batch", "B1"), ("at", "nord"), ("from", "acme"),
                    ("qty", 40), ("cert", "C1")], submitter="nord")
        assert err.value.code == "NoMatchingOutbound"


class TestCertification:
    def test_multi_batch_cert_covers_each_batch(self):
        h = wh()
        certify(h, cert="C9", batches=("B1", "B2"))
        h.call("warehousing", "produce", [("batch", "B1"), ("qty", 10)])
        h.call("warehousing", "produce", [("batch", "B2"), ("qty", 10)])
        for batch in ("B1", "B2"):
            h.call("warehousing", "record_outbound",
                   [("batch", batch), ("from", "acme"), ("to", "nord"),
                    ("qty", 10)])
            h.call("warehousing", "record_inbound",
                   [("batch", batch), ("at", "nord"), ("from", "acme"),
                    ("qty", 10), ("cert", "C9")], submitter="nord")

    def test_duplicate_cert_id(self):
        h = wh()
        certify(h, cert="C1")
        with pytest.raises(ContractError) as err:
            certify(h, cert="C1")
        assert err.value.code == "DuplicateCert"

    def test_cert_does_not_cover_other_batches(self):
        h = wh()
        certify(h, cert="C1", batches=("B1",))
        h.call("warehousing", "produce", [("batch", "B3"), ("qty", 10)])
        h.call("warehousing", "record_outbound",
               [("batch", "B3"), ("from", "acme"), ("to", "nord"),
                ("qty", 10)])
        with pytest.raises(ContractError) as err:
            h.call("warehousing", "record_inbound",
                   [("batch", "B3"), ("at", "nord"), ("from", "acme"),
                    ("qty", 10), ("cert", "C1")], submitter="nord")
        assert err.value.code == "PendingCertification"


def test_consume_decrements_and_tallies():
    h = wh()
    h.call("warehousing", "produce", [("batch", "B1"), ("qty", 10)])
    h.call("warehousing", "consume", [("batch", "B1"), ("qty", 4)])
    assert json.loads(h.get("warehousing/hold:B1:acme"))["qty"] == 6
    assert json.loads(h.get("warehousing/consumed:B1"))["qty"] == 4
    with pytest.raises(ContractError) as err:
        h.call("warehousing", "consume", [("batch", "B1"), ("qty", 7)])
    assert err.value.code == "InsufficientLocalStock"


# -- inventory -----------------------------------------------------------------

def inv() -> ContractHarness:
    return ContractHarness("inventory", chain_id=ChainId.INVENTORY)


class TestQualificationSubmission:
    def test_fresh_submission(self):
        h = inv()
        h.call("inventory", "submit_qualification",
               [("qual", "Q1"), ("blob_digest", "ab" * 32)])
        rec = json.loads(h.get("inventory/qual:Q1"))
        assert rec["status"] == "Submitted" and rec["owner"] == "acme"
        assert "inventory.qualification_submitted" in \
            [e.topic for e in h.events]

    def test_malformed_digest(self):
        h = inv()
        for bad in ("ab" * 31, "zz" * 32, "AB" * 32):
            with pytest.raises(ContractError) as err:
                h.call("inventory", "submit_qualification",
                       [("qual", "Qx"), ("blob_digest", bad)])
            assert err.value.code == "MalformedDigest"

    def test_duplicate_qualification(self):
        h = inv()
        h.call("inventory", "submit_qualification",
               [("qual", "Q1"), ("blob_digest", "ab" * 32)])
        with pytest.raises(ContractError) as err:
            h.call("inventory", "submit_qualification",
                   [("qual", "Q1"), ("blob_digest", "cd" * 32)])
        assert err.value.code == "DuplicateQualification"


class TestStockTransfer:
    def _stocked(self, qty=10):
        h = inv()
        h.call("inventory", "apply_produced",
               [("event", "e1"), ("batch", "B1"), ("org", "A"),
                ("qty", qty)])
        return h

    def cell(self, h, org, status):
        raw = h.get(f"inventory/stock:B1:{org}:{status}")
        return json.loads(raw)["qty"] if raw else 0

    def test_outbound_moves_to_in_transit(self):
        h = self._stocked(10)
        h.call("inventory", "apply_outbound",
               [("event", "e2"), ("batch", "B1"), ("from", "A"),
                ("to", "B"), ("qty", 4)])
        assert self.cell(h, "A", "InStock") == 6
        assert self.cell(h, "B", "InTransit") == 4

    def test_insufficient_stock_leaves_state_unchanged(self):
        h = self._stocked(10)
        with pytest.raises(ContractError) as err:
            h.call("inventory", "apply_outbound",
                   [("event", "e2"), ("batch", "B1"), ("from", "A"),
                    ("to", "B"), ("qty", 11)])
        assert err.value.code == "InsufficientStock"
        assert self.cell(h, "A", "InStock") == 10
        assert self.cell(h, "B", "InTransit") == 0

    def test_redelivered_event_is_noop(self):
        h = self._stocked(10)
        args = [("event", "e2"), ("batch", "B1"), ("from", "A"),
                ("to", "B"), ("qty", 4)]
        h.call("inventory", "apply_outbound", args)
        result = h.call("inventory", "apply_outbound", args)
        assert result.get("duplicate") == "true"
        assert self.cell(h, "A", "InStock") == 6

    def test_inbound_flips_status(self):
        h = self._stocked(10)
        h.call("inventory", "apply_outbound",
               [("event", "e2"), ("batch", "B1"), ("from", "A"),
                ("to", "B"), ("qty", 4)])
        h.call("inventory", "apply_inbound",
               [("event", "e3"), ("batch", "B1"), ("at", "B"), ("qty", 4)])
        assert self.cell(h, "B", "InTransit") == 0
        assert self.cell(h, "B", "InStock") == 4

    def test_inbound_without_transit_rejected(self):
        h = self._stocked(10)
        with pytest.raises(ContractError) as err:
            h.call("inventory", "apply_inbound",
                   [("event", "e3"), ("batch", "B1"), ("at", "B"),
                    ("qty", 4)])
        assert err.value.code == "NoInTransitRecord"

    def test_inbound_redelivery_noop(self):
        h = self._stocked(10)
        h.call("inventory", "apply_outbound",
               [("event", "e2"), ("batch", "B1"), ("from", "A"),
                ("to", "B"), ("qty", 4)])
        args = [("event", "e3"), ("batch", "B1"), ("at", "B"), ("qty", 4)]
        h.call("inventory", "apply_inbound", args)
        assert h.call("inventory", "apply_inbound", args)["duplicate"] == "true"
        assert self.cell(h, "B", "InStock") == 4


# -- supervision -----------------------------------------------------------------

def sup() -> ContractHarness:
    return ContractHarness("supervision", chain_id=ChainId.SUPERVISION,
                           roles={"fda": Role.SUPERVISOR})


def submitted_qual(h, qual="Q1"):
    h.call("supervision", "note_qualification",
           [("event", f"note-{qual}"), ("qual", qual), ("owner", "acme")])


class TestDecideQualification:
    def test_supervisor_approves(self):
        h = sup()
        submitted_qual(h)
        result = h.call("supervision", "decide_qualification",
                        [("qual", "Q1"), ("decision", "Approve")],
                        submitter="fda")
        assert result["status"] == "Approved"
        rec = json.loads(h.get("supervision/qual:Q1"))
        assert rec["decided_by"] == "fda"
        assert "supervision.qualification_decided" in \
            [e.topic for e in h.events]

    def test_member_cannot_decide(self):
        h = sup()
        submitted_qual(h)
        with pytest.raises(ContractError) as err:
            h.call("supervision", "decide_qualification",
                   [("qual", "Q1"), ("decision", "Approve")],
                   submitter="acme")
        assert err.value.code == "NotSupervisor"

    def test_single_transition(self):
        h = sup()
        submitted_qual(h)
        h.call("supervision", "decide_qualification",
               [("qual", "Q1"), ("decision", "Approve")], submitter="fda")
        with pytest.raises(ContractError) as err:
            h.call("supervision", "decide_qualification",
                   [("qual", "Q1"), ("decision", "Reject")], submitter="fda")
        assert err.value.code == "AlreadyDecided"

    def test_unknown_qualification(self):
        h = sup()
        with pytest.raises(ContractError) as err:
            h.call("supervision", "decide_qualification",
                   [("qual", "NOPE"), ("decision", "Approve")],
                   submitter="fda")
        assert err.value.code == "UnknownQualification"


def test_audit_ingest_sequences_and_dedupes():
    h = sup()
    entry = [("event", "e1"), ("source", "warehousing.outbound"),
             ("actor", "acme"), ("action", "outbound"), ("subject", "B1"),
             ("time", 4)]
    h.call("supervision", "ingest", entry)
    h.call("supervision", "ingest", entry)  # redelivery
    h.call("supervision", "ingest",
           [("event", "e2"), ("source", "warehousing.inbound"),
            ("actor", "nord"), ("action", "inbound"), ("subject", "B1"),
            ("time", 5)])
    assert json.loads(h.get("supervision/auditn"))["n"] == 2
    first = json.loads(h.get("supervision/audit:0000000000"))
    assert first["action"] == "outbound" and first["seq"] == 0


# -- traceability ------------------------------------------------------------------

def trc() -> ContractHarness:
    return ContractHarness("traceability", chain_id=ChainId.TRACEABILITY)


def out_leg(h, n=1, batch="B1"):
    h.call("traceability", "note_outbound", [
        ("event", f"out{n}"), ("batch", batch), ("from", "A"), ("to", "B"),
        ("qty", 10), ("outbound_tx", f"tx{n}"), ("token", "TT1-X-0"),
        ("time", n)])


def in_leg(h, n=1, batch="B1"):
    return h.call("traceability", "append_hop", [
        ("event", f"in{n}"), ("batch", batch), ("from", "A"), ("at", "B"),
        ("qty", 10), ("cert", "C1"), ("outbound_tx", f"tx{n}"),
        ("inbound_tx", f"itx{n}"), ("time", n)])


class TestHopPairing:
    def test_first_pair_seq_zero(self):
        h = trc()
        out_leg(h, 1)
        result = in_leg(h, 1)
        assert result["seq"] == "0"
        hop = json.loads(h.get("traceability/hop:B1:0000000000"))
        assert hop["from"] == "A" and hop["to"] == "B"

    def test_gapless_sequence(self):
        h = trc()
        for n in range(1, 4):
            out_leg(h, n)
            in_leg(h, n)
        assert json.loads(h.get("traceability/hopn:B1"))["n"] == 3
        assert json.loads(h.get("traceability/hop:B1:0000000002"))["seq"] == 2

    def test_orphan_inbound_parks_until_outbound(self):
        h = trc()
        result = in_leg(h, 5)
        assert result.get("parked") == "OrphanInbound"
        assert h.get("traceability/hopn:B1") is None
        out_leg(h, 5)
        assert json.loads(h.get("traceability/hopn:B1"))["n"] == 1

    def test_redelivered_pair_adds_no_hop(self):
        h = trc()
        out_leg(h, 1)
        in_leg(h, 1)
        assert h.call("traceability", "append_hop", [
            ("event", "in1"), ("batch", "B1"), ("from", "A"), ("at", "B"),
            ("qty", 10), ("cert", "C1"), ("outbound_tx", "tx1"),
            ("inbound_tx", "itx1"), ("time", 1)])["duplicate"] == "true"
        assert json.loads(h.get("traceability/hopn:B1"))["n"] == 1


# -- user authority ------------------------------------------------------------------

def test_register_user_and_duplicate():
    h = ContractHarness("user_authority", chain_id=ChainId.USER_AUTHORITY)
    h.call("user_authority", "register_user",
           [("user", "u1"), ("org", "acme"), ("role", "Member"),
            ("cred_digest", "ab" * 32)])
    rec = json.loads(h.get("user_authority/user:u1"))
    assert rec["org"] == "acme"
    with pytest.raises(ContractError) as err:
        h.call("user_authority", "register_user",
               [("user", "u1"), ("org", "acme"), ("role", "Member"),
                ("cred_digest", "ab" * 32)])
    assert err.value.code == "DuplicateUser"


# -- enterprise -----------------------------------------------------------------------

def ent() -> ContractHarness:
    h = ContractHarness("enterprise", chain_id=ChainId.ENTERPRISE)
    for org in ("acme", "nordfish"):
        h.call("enterprise", "register_enterprise", [("org", org),
                                                     ("name", org)])
    return h


class TestPartnership:
    def test_link_is_symmetric(self):
        h = ent()
        h.call("enterprise", "link_partner", [("a", "acme"),
                                              ("b", "nordfish")])
        assert h.get("enterprise/partner:acme:nordfish") is not None
        assert h.get("enterprise/partner:nordfish:acme") is not None

    def test_link_unknown_org(self):
        h = ent()
        with pytest.raises(ContractError) as err:
            h.call("enterprise", "link_partner", [("a", "acme"),
                                                  ("b", "stranger")])
        assert err.value.code == "UnknownOrg"

    def test_outbound_to_non_partner_flagged_not_rejected(self):
        h = ent()
        h.call("enterprise", "link_partner", [("a", "acme"),
                                              ("b", "nordfish")])
        h.call("enterprise", "note_outbound",
               [("event", "e1"), ("from", "acme"), ("to", "nordfish"),
                ("outbound_tx", "t1")])
        h.call("enterprise", "note_outbound",
               [("event", "e2"), ("from", "acme"), ("to", "stranger"),
                ("outbound_tx", "t2")])
        ok = json.loads(h.get("enterprise/coop:t1"))
        warn = json.loads(h.get("enterprise/coop:t2"))
        assert ok["partner"] and not ok["non_partner_warning"]
        assert not warn["partner"] and warn["non_partner_warning"]
