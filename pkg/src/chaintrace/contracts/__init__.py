"""The six domain contracts plus the main-chain anchor contract.

Operation names and argument keys below are part of the on-chain canonical
serialization and are frozen. Quantities travel as ASCII decimal; digests
as lowercase hex; tx references as 64-char hex.

contract        operation                args
--------------- ------------------------ ------------------------------------
warehousing     produce                  batch, qty
warehousing     register_certification   cert, issuer, batches(JSON), blob_digest
warehousing     record_outbound          batch, from, to, qty
warehousing     record_inbound           batch, at, from, qty, cert
warehousing     consume                  batch, qty
inventory       submit_qualification     qual, blob_digest
inventory       apply_produced           event, batch, org, qty
inventory       apply_outbound           event, batch, from, to, qty
inventory       apply_inbound            event, batch, at, qty
inventory       apply_consumed           event, batch, org, qty
inventory       apply_decision           event, qual, decision, decided_by
supervision     ingest                   event, source, actor, action, subject, time
supervision     note_qualification       event, qual, owner
supervision     decide_qualification     qual, decision
traceability    note_outbound            event, batch, from, to, qty, outbound_tx, token, time
traceability    append_hop               event, batch, from, at, qty, cert, outbound_tx, inbound_tx, time
user_authority  register_user            user, org, role, cred_digest
enterprise      register_enterprise      org, name
enterprise      link_partner             a, b
enterprise      note_outbound            event, from, to, outbound_tx
anchor          anchor                   sub, height, hash, entries(JSON)
"""

from chaintrace.contracts.anchor import AnchorContract
from chaintrace.contracts.base import Contract, dump_record, kpath, load_record
from chaintrace.contracts.enterprise import EnterpriseContract
from chaintrace.contracts.inventory import InventoryContract
from chaintrace.contracts.supervision import SupervisionContract
from chaintrace.contracts.traceability import TraceabilityContract
from chaintrace.contracts.user_authority import UserAuthorityContract
from chaintrace.contracts.warehousing import WarehousingContract

_CONTRACTS = {
    "anchor": AnchorContract,
    "enterprise": EnterpriseContract,
    "inventory": InventoryContract,
    "supervision": SupervisionContract,
    "traceability": TraceabilityContract,
    "user_authority": UserAuthorityContract,
    "warehousing": WarehousingContract,
}


def make_contract(name: str) -> Contract:
    try:
        return _CONTRACTS[name]()
    except KeyError:
        raise ValueError(f"unknown contract: {name!r}") from None


__all__ = [
    "Contract",
    "make_contract",
    "kpath",
    "dump_record",
    "load_record",
    "AnchorContract",
    "EnterpriseContract",
    "InventoryContract",
    "SupervisionContract",
    "TraceabilityContract",
    "UserAuthorityContract",
    "WarehousingContract",
]
