"""Top-level assembly: ledger engine + event bus + blob store + the six
context services, wired per the context map.

Consumer groups:
    inventory     <- warehousing.{produced,outbound,inbound,consumed},
                     supervision.qualification_decided
    traceability  <- warehousing.{outbound,inbound}   (customer/supplier)
    enterprise    <- warehousing.outbound
    supervision   <- every topic (anticorruption layer)

``settle`` drives manual-mode deployments to quiescence: it alternates
chain flushes and bus pumps until no pending transactions remain and every
consumer group sits at its topic tip. Scenario runs and tests lean on this
for determinism.
"""

from __future__ import annotations

import importlib.resources as resources
import json
import time
from pathlib import Path
from typing import Optional

from chaintrace.blobstore import BlobStore
from chaintrace.contracts import make_contract
from chaintrace.domains.registry import ServiceRegistry
from chaintrace.domains.services import (
    ChainRepository,
    EnterpriseService,
    InventoryService,
    Principal,
    SupervisionService,
    SVC_ENTERPRISE,
    SVC_INVENTORY,
    SVC_SUPERVISION,
    SVC_TRACEABILITY,
    SVC_USERS,
    SVC_WAREHOUSING,
    TraceabilityService,
    UserAuthorityService,
    WarehousingService,
)
from chaintrace.errors import ChainTraceError
from chaintrace.eventbus import CrashPolicy, EventBus
from chaintrace.ledger.chain import EventSpec, PendingTx
from chaintrace.ledger.engine import LedgerEngine
from chaintrace.ledger.genesis import GenesisConfig
from chaintrace.ledger.types import ChainId, Role

ALL_TOPICS = (
    "warehousing.produced",
    "warehousing.outbound",
    "warehousing.inbound",
    "warehousing.consumed",
    "warehousing.certified",
    "inventory.qualification_submitted",
    "supervision.qualification_decided",
    "user_authority.user_registered",
    "enterprise.registered",
    "enterprise.partner_linked",
)

_SERVICE_ORGS = (
    (SVC_USERS, ChainId.USER_AUTHORITY),
    (SVC_ENTERPRISE, ChainId.ENTERPRISE),
    (SVC_WAREHOUSING, ChainId.WAREHOUSING),
    (SVC_INVENTORY, ChainId.INVENTORY),
    (SVC_SUPERVISION, ChainId.SUPERVISION),
    (SVC_TRACEABILITY, ChainId.TRACEABILITY),
)


def load_anticorruption_map(path: Optional[Path] = None) -> dict:
    if path is not None:
        return json.loads(Path(path).read_text())
    raw = resources.files("chaintrace.data").joinpath(
        "anticorruption.json").read_text()
    return json.loads(raw)


class TraceSystem:
    def __init__(
        self,
        config: Optional[GenesisConfig] = None,
        data_dir: Optional[Path] = None,
        drive: str = "manual",
        crash_policy: Optional[CrashPolicy] = None,
        anticorruption_path: Optional[Path] = None,
        autostart: bool = True,
    ):
        if data_dir is not None:
            data_dir = Path(data_dir)
            genesis_path = data_dir / "genesis.json"
            if genesis_path.exists():
                config = GenesisConfig.load(genesis_path)
            elif config is not None:
                data_dir.mkdir(parents=True, exist_ok=True)
                config.dump(genesis_path)
        if config is None:
            raise ValueError("a genesis config is required for a fresh system")
        self.config = config
        self.data_dir = data_dir
        self.drive = drive
        self.engine = LedgerEngine(config, make_contract, data_dir, drive)
        self.bus = EventBus(data_dir, crash_policy)
        self.blobs = BlobStore(data_dir)
        self.registry = ServiceRegistry()
        self.anticorruption = load_anticorruption_map(anticorruption_path)
        self.engine.on_events = self._publish_specs

        for org_id, chain_id in _SERVICE_ORGS:
            if org_id not in self.engine.acl(chain_id):
                self.engine.register_org(chain_id, org_id, Role.MEMBER,
                                         f"service principal {org_id}".encode())

        def waiter(handle: PendingTx) -> dict:
            if self.drive == "manual":
                self.engine.chains[handle.tx.chain_id].flush()
            return handle.wait(10.0).outcome()

        def repo(chain_id: ChainId, org: str) -> ChainRepository:
            return ChainRepository(self.engine, chain_id, org, waiter)

        self.user_authority = UserAuthorityService(
            repo(ChainId.USER_AUTHORITY, SVC_USERS))
        self.enterprise = EnterpriseService(
            repo(ChainId.ENTERPRISE, SVC_ENTERPRISE))
        self.warehousing = WarehousingService(
            repo(ChainId.WAREHOUSING, SVC_WAREHOUSING))
        self.inventory = InventoryService(repo(ChainId.INVENTORY, SVC_INVENTORY))
        self.supervision = SupervisionService(
            repo(ChainId.SUPERVISION, SVC_SUPERVISION), self.anticorruption)
        self.traceability = TraceabilityService(
            repo(ChainId.TRACEABILITY, SVC_TRACEABILITY))

        for name, service in (
            ("user_authority", self.user_authority),
            ("enterprise", self.enterprise),
            ("warehousing", self.warehousing),
            ("inventory", self.inventory),
            ("supervision", self.supervision),
            ("traceability", self.traceability),
        ):
            self.registry.register(name, service)

        self._wire_subscriptions()
        if drive == "auto" and autostart:
            self.start()
        self._bootstrap_users()

    # -- events ------------------------------------------------------------
    def _publish_specs(self, chain_id: ChainId, events: list[EventSpec]) -> None:
        for spec in events:
            self.bus.publish(spec.topic, spec.key, dict(spec.payload),
                             int(chain_id), spec.source_tx)

    def _wire_subscriptions(self) -> None:
        sub = self.bus.subscribe
        sub("warehousing.produced", "inventory", self.inventory.on_produced)
        sub("warehousing.outbound", "inventory", self.inventory.on_outbound)
        sub("warehousing.inbound", "inventory", self.inventory.on_inbound)
        sub("warehousing.consumed", "inventory", self.inventory.on_consumed)
        sub("supervision.qualification_decided", "inventory",
            self.inventory.on_decision)
        sub("warehousing.outbound", "traceability",
            self.traceability.on_outbound)
        sub("warehousing.inbound", "traceability", self.traceability.on_inbound)
        sub("warehousing.outbound", "enterprise", self.enterprise.on_outbound)
        for topic in ALL_TOPICS:
            sub(topic, "supervision", self.supervision.on_event)

    def _bootstrap_users(self) -> None:
        from chaintrace.contracts.base import kpath
        for spec in self.config.users:
            if not self.user_authority.user_exists(spec.user):
                org = self.engine.org(spec.org)
                role = org.role if org else Role.MEMBER
                self.user_authority.register_user(spec.user, spec.org, role,
                                                  spec.credential)
        for org_spec in self.config.orgs:
            if (org_spec.role is Role.MEMBER
                    and ChainId.ENTERPRISE in org_spec.chains
                    and self.enterprise.repo.read(
                        f"enterprise/{kpath('ent', org_spec.id)}") is None):
                self.enterprise.repo.submit(
                    "enterprise", "register_enterprise",
                    [("org", org_spec.id), ("name", org_spec.id)])
        if self.drive == "manual":
            self.settle()

    # -- lifecycle -----------------------------------------------------------
    def start(self) -> None:
        self.engine.start()
        self.bus.start()

    def close(self) -> None:
        self.bus.stop()
        self.engine.stop()
        if self.drive == "manual":
            try:
                self.settle(timeout=5.0)
            except ChainTraceError:
                pass
        self.bus.close()
        self.engine.close()

    def restart_bus(self, crash_policy: Optional[CrashPolicy] = None) -> None:
        """Simulate a full message-queue restart (durable logs reload)."""
        self.bus.close()
        self.bus = EventBus(self.data_dir, crash_policy)
        self._wire_subscriptions()

    # -- quiescence -----------------------------------------------------------
    def settle(self, timeout: float = 30.0) -> None:
        deadline = time.monotonic() + timeout
        if self.drive == "manual":
            while True:
                progressed = self.engine.flush_all() > 0
                progressed |= self.bus.pump_once() > 0
                if (not progressed and self.engine.pending_total() == 0
                        and self.bus.at_tips()):
                    return
                if time.monotonic() > deadline:
                    raise ChainTraceError("Timeout",
                                          "system did not reach quiescence")
        else:
            quiet = 0
            while quiet < 3:
                if self.engine.pending_total() == 0 and self.bus.at_tips():
                    quiet += 1
                else:
                    quiet = 0
                if time.monotonic() > deadline:
                    raise ChainTraceError("Timeout",
                                          "system did not reach quiescence")
                time.sleep(0.01)

    # -- auth convenience -------------------------------------------------------
    def login(self, user: str, credential: str) -> Principal:
        return self.user_authority.authenticate(user, credential)
