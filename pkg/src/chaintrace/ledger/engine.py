"""Multi-chain ledger engine: seven chains, access control, main-chain
anchoring and index lookup."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from chaintrace import kernel
from chaintrace.errors import ChainTraceError
from chaintrace.ledger import genesis as genesis_mod
from chaintrace.ledger.blocklog import FileBlockLog, MemoryBlockLog
from chaintrace.ledger.chain import Chain, EventSpec, PendingTx, replay_records
from chaintrace.ledger.genesis import GenesisConfig
from chaintrace.ledger.quorum import QuorumLog
from chaintrace.ledger.types import (
    AnchorRecord,
    ChainId,
    IndexRecord,
    OrgId,
    RegistrationReceipt,
    Role,
    Transaction,
    VerifyReport,
)

ANCHOR_ORG = "sys#anchor"

ArgValue = Union[str, bytes, int]


def _to_bytes(value: ArgValue) -> bytes:
    if isinstance(value, bytes):
        return value
    if isinstance(value, int):
        return str(value).encode("ascii")
    return value.encode("utf-8")


class LedgerEngine:
    """Owns the seven chains, the org registry, and per-chain ACLs.

    ``contract_factory`` maps a deployment name to a fresh contract
    instance; the engine itself knows nothing about specific contracts.
    """

    def __init__(
        self,
        config: GenesisConfig,
        contract_factory: Callable[[str], object],
        data_dir: Optional[Path] = None,
        drive: str = "manual",
    ):
        if drive not in ("manual", "auto"):
            raise ValueError(f"unknown drive mode: {drive}")
        self.config = config
        self.drive = drive
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._orgs: dict[str, OrgId] = {}
        self._acls: dict[ChainId, set[str]] = {c: set() for c in ChainId}
        self._acl_lock = threading.Lock()
        self._anchor_lock = threading.Lock()
        self._pending_anchor_heights: dict[ChainId, int] = {}
        self.on_events: Optional[Callable[[ChainId, list[EventSpec]], None]] = None

        self.chains: dict[ChainId, Chain] = {}
        for chain_id in ChainId:
            contracts = {
                name: contract_factory(name)
                for name in config.deployments.get(chain_id, ())
            }
            log = self._open_log(chain_id)
            self.chains[chain_id] = Chain(
                chain_id, contracts, log, role_of=self._role_of,
                batch_size=config.batch_size,
                flush_interval=config.flush_interval,
            )
        for chain in self.chains.values():
            chain.on_events = self._publish_events
            chain.on_block = self._after_block

        self._load_acl_snapshot()
        for org in config.orgs:
            if org.role is Role.SUPERVISOR:
                if org.id not in self._acls[ChainId.MAIN]:
                    self.register_org(ChainId.MAIN, org.id, org.role, org.cert)
                continue
            for chain_id in org.chains:
                if org.id not in self._acls[chain_id]:
                    self.register_org(chain_id, org.id, org.role, org.cert)
        if ANCHOR_ORG not in self._acls[ChainId.MAIN]:
            self.register_org(ChainId.MAIN, ANCHOR_ORG, Role.MEMBER,
                              b"internal anchoring agent")

    def _open_log(self, chain_id: ChainId):
        if self.data_dir is None:
            leader = MemoryBlockLog()
        else:
            leader = FileBlockLog(
                self.data_dir / "chains" / genesis_mod.chain_log_name(chain_id))
        if self.config.ordering_mode == "quorum":
            return QuorumLog(leader, replicas=self.config.ordering_replicas)
        return leader

    # -- orgs and access -----------------------------------------------------
    def _acl_snapshot_path(self) -> Optional[Path]:
        return None if self.data_dir is None else self.data_dir / "acl.json"

    def _load_acl_snapshot(self) -> None:
        path = self._acl_snapshot_path()
        if path is None or not path.exists():
            return
        snap = json.loads(path.read_text())
        for org_id, rec in snap["orgs"].items():
            self._orgs[org_id] = OrgId(org_id, Role.from_label(rec["role"]),
                                       bytes.fromhex(rec["fp"]))
        for label, ids in snap["acls"].items():
            self._acls[ChainId.from_label(label)] = set(ids)

    def _store_acl_snapshot(self) -> None:
        path = self._acl_snapshot_path()
        if path is None:
            return
        snap = {
            "orgs": {o.id: {"role": o.role.label,
                            "fp": o.cert_fingerprint.hex()}
                     for o in self._orgs.values()},
            "acls": {c.label: sorted(ids) for c, ids in self._acls.items()},
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(snap, indent=1, sort_keys=True))

    def _role_of(self, org_id: str) -> Role:
        org = self._orgs.get(org_id)
        return org.role if org else Role.MEMBER

    def register_org(self, chain: ChainId, org_id: str, role: Role,
                     cert: bytes) -> RegistrationReceipt:
        if not cert:
            raise ChainTraceError("EmptyCert", "certification document required")
        with self._acl_lock:
            if org_id in self._acls[chain]:
                raise ChainTraceError(
                    "DuplicateOrg", f"{org_id!r} already registered on "
                                    f"{chain.label}")
            existing = self._orgs.get(org_id)
            if existing is None:
                org = OrgId(org_id, role, kernel.sha256(cert))
                self._orgs[org_id] = org
            else:
                org = existing
            if org.role is Role.SUPERVISOR:
                chains = tuple(ChainId)
                for c in ChainId:
                    self._acls[c].add(org_id)
            else:
                chains = (chain,)
                self._acls[chain].add(org_id)
            self._store_acl_snapshot()
        return RegistrationReceipt(org_id, org.role, org.cert_fingerprint, chains)

    def org(self, org_id: str) -> Optional[OrgId]:
        return self._orgs.get(org_id)

    def acl(self, chain: ChainId) -> set[str]:
        with self._acl_lock:
            return set(self._acls[chain])

    def _check_access(self, chain: ChainId, org_id: str) -> OrgId:
        org = self._orgs.get(org_id)
        if org is None:
            raise ChainTraceError("AccessDenied",
                                  f"unknown organization {org_id!r}")
        if org.role is Role.SUPERVISOR:
            return org
        with self._acl_lock:
            if org_id not in self._acls[chain]:
                raise ChainTraceError(
                    "AccessDenied",
                    f"{org_id!r} is not registered on {chain.label}")
        return org

    # -- transactions ----------------------------------------------------------
    def submit(self, chain: ChainId, contract: str, operation: str,
               args: Sequence[tuple[str, ArgValue]], submitter: str,
               nonce: Optional[int] = None) -> PendingTx:
        self._check_access(chain, submitter)
        ch = self.chains[chain]
        encoded = tuple((k, _to_bytes(v)) for k, v in args)

        def build(n: int) -> Transaction:
            return Transaction(chain_id=chain, contract=contract,
                               operation=operation, args=encoded,
                               submitter=submitter, nonce=n)

        if nonce is None:
            return ch.submit_auto(submitter, build)
        return ch.submit(build(nonce))

    def read_state(self, chain: ChainId, key: str, caller: str) -> Optional[bytes]:
        self._check_access(chain, caller)
        return self.chains[chain].read(key)

    def scan_state(self, chain: ChainId, prefix: str,
                   caller: str) -> list[tuple[str, bytes]]:
        self._check_access(chain, caller)
        return self.chains[chain].scan(prefix)

    # -- verification ------------------------------------------------------------
    def verify_chain(self, chain: ChainId) -> VerifyReport:
        ch = self.chains[chain]
        with ch._commit_lock:
            records = ch.log.records()
        result = replay_records(chain, records, ch.contracts)
        if result.ok:
            return VerifyReport(chain, True)
        return VerifyReport(chain, False, result.first_bad_height, result.detail)

    def verify_all(self) -> list[VerifyReport]:
        return [self.verify_chain(c) for c in ChainId]

    # -- flow control -----------------------------------------------------------
    def flush_all(self) -> int:
        """One flush pass over every chain (manual drive). Returns blocks made."""
        blocks = 0
        for chain in self.chains.values():
            if chain.flush() is not None:
                blocks += 1
        return blocks

    def drain(self) -> None:
        """Flush until every chain's pending queue is empty."""
        while self.flush_all():
            pass

    def pending_total(self) -> int:
        return sum(c.pending_count() for c in self.chains.values())

    def start(self) -> None:
        if self.drive == "auto":
            for chain in self.chains.values():
                chain.start()

    def stop(self) -> None:
        for chain in self.chains.values():
            chain.stop()

    def close(self) -> None:
        self.stop()
        for chain in self.chains.values():
            chain.log.close()

    # -- events -------------------------------------------------------------------
    def _publish_events(self, chain: ChainId, events: list[EventSpec]) -> None:
        if self.on_events is not None:
            self.on_events(chain, events)

    def _after_block(self, chain: Chain, block) -> None:
        if (chain.chain_id is not ChainId.MAIN
                and self.config.anchor_every > 0
                and block.height % self.config.anchor_every == 0):
            try:
                self.anchor(chain.chain_id)
            except ChainTraceError as err:
                if err.code != "NothingToAnchor":
                    raise

    # -- anchoring -----------------------------------------------------------------
    # key layout shared with the anchor contract (see contracts.anchor)
    @staticmethod
    def _anchor_key(*parts: str) -> str:
        from chaintrace.contracts.base import kpath
        return "anchor/" + kpath(*parts)

    def last_anchored_height(self, sub_chain: ChainId) -> int:
        raw = self.chains[ChainId.MAIN].read(
            self._anchor_key("tip", sub_chain.label))
        if raw is None:
            return 0
        return json.loads(raw)["height"]

    def anchor(self, sub_chain: ChainId) -> PendingTx:
        """Checkpoint a sub-chain tip plus its index-flagged writes onto Main."""
        if sub_chain is ChainId.MAIN:
            raise ChainTraceError("UnknownChain", "cannot anchor the main chain")
        with self._anchor_lock:
            ch = self.chains[sub_chain]
            last = self.last_anchored_height(sub_chain)
            # include anchor txs already enqueued but not yet committed
            pending = self._pending_anchor_heights.get(sub_chain, 0)
            floor = max(last, pending)
            tip = ch.height
            if tip <= floor:
                raise ChainTraceError(
                    "NothingToAnchor",
                    f"{sub_chain.label} tip {tip} already anchored")
            entries = [
                {"key": f.key, "tx_id": f.tx_id.hex(), "height": f.height}
                for f in ch.flagged_since(floor)
            ]
            handle = self.submit(
                ChainId.MAIN, "anchor", "anchor",
                args=[
                    ("sub", sub_chain.label),
                    ("height", tip),
                    ("hash", ch.tip_hash.hex()),
                    ("entries", json.dumps(entries, sort_keys=True)),
                ],
                submitter=ANCHOR_ORG,
            )
            self._pending_anchor_heights[sub_chain] = tip
            return handle

    def locate(self, key: str) -> list[IndexRecord]:
        main = self.chains[ChainId.MAIN]
        raw = main.read(self._anchor_key("idxn", key))
        if raw is None:
            return []
        count = json.loads(raw)["n"]
        out = []
        for i in range(count):
            rec = main.read(self._anchor_key("idx", key, f"{i:010d}"))
            if rec is None:
                continue
            d = json.loads(rec)
            out.append(IndexRecord(
                key=key,
                sub_chain=ChainId.from_label(d["sub"]),
                tx_id=bytes.fromhex(d["tx_id"]),
                height=d["height"],
            ))
        return out

    def anchor_records(self, sub_chain: ChainId) -> list[AnchorRecord]:
        main = self.chains[ChainId.MAIN]
        items = main.scan(self._anchor_key("rec", sub_chain.label) + ":")
        records = []
        for _, raw in items:
            d = json.loads(raw)
            records.append(AnchorRecord(
                sub_chain=sub_chain,
                anchored_height=d["height"],
                block_hash=bytes.fromhex(d["hash"]),
            ))
        records.sort(key=lambda r: r.anchored_height)
        return records
