"""Genesis configuration: chains, orgs, roles, users, contract deployments.

Plain JSON so deployments can be diffed and checked into fixtures. The same
file is copied into the data directory on first boot and reused on reopen,
which keeps replay identical across restarts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from chaintrace.ledger.types import ChainId, Role, SUB_CHAINS

# standard deployment: each domain contract on its home chain
DEFAULT_DEPLOYMENTS: dict[ChainId, tuple[str, ...]] = {
    ChainId.MAIN: ("anchor",),
    ChainId.USER_AUTHORITY: ("user_authority",),
    ChainId.ENTERPRISE: ("enterprise",),
    ChainId.WAREHOUSING: ("warehousing",),
    ChainId.INVENTORY: ("inventory",),
    ChainId.SUPERVISION: ("supervision",),
    ChainId.TRACEABILITY: ("traceability",),
}


@dataclass(frozen=True)
class OrgSpec:
    id: str
    role: Role
    cert: bytes
    chains: tuple[ChainId, ...]


@dataclass(frozen=True)
class UserSpec:
    user: str
    org: str
    credential: str


@dataclass(frozen=True)
class GenesisConfig:
    orgs: tuple[OrgSpec, ...] = ()
    users: tuple[UserSpec, ...] = ()
    deployments: dict[ChainId, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_DEPLOYMENTS))
    ordering_mode: str = "solo"
    ordering_replicas: int = 3
    batch_size: int = 500
    flush_interval: float = 0.050
    anchor_every: int = 10

    @classmethod
    def from_dict(cls, raw: dict) -> "GenesisConfig":
        orgs = []
        for o in raw.get("orgs", []):
            role = Role.from_label(o.get("role", "Member"))
            chains = tuple(ChainId.from_label(c) for c in o.get("chains", []))
            if role is Role.SUPERVISOR:
                chains = tuple(ChainId)
            orgs.append(OrgSpec(o["id"], role, o["cert"].encode("utf-8"), chains))
        users = tuple(
            UserSpec(u["user"], u["org"], u["credential"])
            for u in raw.get("users", []))
        deployments = dict(DEFAULT_DEPLOYMENTS)
        if "deployments" in raw:
            deployments = {
                ChainId.from_label(chain): tuple(names)
                for chain, names in raw["deployments"].items()
            }
        ordering = raw.get("ordering", {})
        return cls(
            orgs=tuple(orgs),
            users=users,
            deployments=deployments,
            ordering_mode=ordering.get("mode", "solo"),
            ordering_replicas=int(ordering.get("replicas", 3)),
            batch_size=int(raw.get("batch_size", 500)),
            flush_interval=float(raw.get("flush_interval_ms", 50)) / 1000.0,
            anchor_every=int(raw.get("anchor_every", 10)),
        )

    @classmethod
    def load(cls, path: Path) -> "GenesisConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "ordering": {"mode": self.ordering_mode,
                         "replicas": self.ordering_replicas},
            "batch_size": self.batch_size,
            "flush_interval_ms": self.flush_interval * 1000.0,
            "anchor_every": self.anchor_every,
            "deployments": {c.label: list(names)
                            for c, names in self.deployments.items()},
            "orgs": [
                {"id": o.id, "role": o.role.label,
                 "cert": o.cert.decode("utf-8"),
                 "chains": [c.label for c in o.chains]}
                for o in self.orgs
            ],
            "users": [
                {"user": u.user, "org": u.org, "credential": u.credential}
                for u in self.users
            ],
        }

    def dump(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _member(org_id: str, cert: str, *chains: ChainId) -> dict:
    return {"id": org_id, "role": "Member", "cert": cert,
            "chains": [c.label for c in chains]}


def salmon_genesis() -> GenesisConfig:
    """The bundled salmon supply-chain deployment: six companies along the
    route plus the supervising quarantine bureau."""
    company_chains = (ChainId.WAREHOUSING, ChainId.INVENTORY, ChainId.ENTERPRISE)
    companies = ["farm", "exporter", "importer", "processor", "distributor",
                 "retailer"]
    raw = {
        "orgs": [
            _member(org, f"{org} business license", *company_chains)
            for org in companies
        ] + [
            {"id": "quarantine", "role": "Supervisor",
             "cert": "quarantine bureau charter", "chains": []},
        ],
        "users": [
            {"user": f"{org}.clerk", "org": org, "credential": f"{org}-secret"}
            for org in companies
        ] + [
            {"user": "quarantine.inspector", "org": "quarantine",
             "credential": "quarantine-secret"},
        ],
    }
    return GenesisConfig.from_dict(raw)


def chain_log_name(chain_id: ChainId) -> str:
    return {
        ChainId.MAIN: "main",
        ChainId.USER_AUTHORITY: "user_authority",
        ChainId.ENTERPRISE: "enterprise",
        ChainId.WAREHOUSING: "warehousing",
        ChainId.INVENTORY: "inventory",
        ChainId.SUPERVISION: "supervision",
        ChainId.TRACEABILITY: "traceability",
    }[chain_id] + ".log"


__all__ = ["GenesisConfig", "OrgSpec", "UserSpec", "DEFAULT_DEPLOYMENTS",
           "salmon_genesis", "chain_log_name", "SUB_CHAINS"]
