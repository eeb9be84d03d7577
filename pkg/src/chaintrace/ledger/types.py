"""Core ledger value types: chains, orgs, transactions, blocks."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

from chaintrace import kernel
from chaintrace.kernel import wire


class ChainId(IntEnum):
    MAIN = 0
    USER_AUTHORITY = 1
    ENTERPRISE = 2
    WAREHOUSING = 3
    INVENTORY = 4
    SUPERVISION = 5
    TRACEABILITY = 6

    @property
    def label(self) -> str:
        return _CHAIN_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "ChainId":
        try:
            return _CHAIN_BY_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown chain: {label!r}") from None


_CHAIN_LABELS = {
    ChainId.MAIN: "Main",
    ChainId.USER_AUTHORITY: "UserAuthority",
    ChainId.ENTERPRISE: "Enterprise",
    ChainId.WAREHOUSING: "Warehousing",
    ChainId.INVENTORY: "Inventory",
    ChainId.SUPERVISION: "Supervision",
    ChainId.TRACEABILITY: "Traceability",
}
_CHAIN_BY_LABEL = {v: k for k, v in _CHAIN_LABELS.items()}

SUB_CHAINS: tuple[ChainId, ...] = tuple(c for c in ChainId if c is not ChainId.MAIN)


class Role(IntEnum):
    MEMBER = 0
    SUPERVISOR = 1

    @classmethod
    def from_label(cls, label: str) -> "Role":
        try:
            return {"Member": cls.MEMBER, "Supervisor": cls.SUPERVISOR}[label]
        except KeyError:
            raise ValueError(f"unknown role: {label!r}") from None

    @property
    def label(self) -> str:
        return "Supervisor" if self is Role.SUPERVISOR else "Member"


@dataclass(frozen=True)
class OrgId:
    id: str
    role: Role
    cert_fingerprint: bytes

    def __post_init__(self):
        if not self.id:
            raise ValueError("org id must be nonempty")
        if len(self.cert_fingerprint) != 32:
            raise ValueError("cert_fingerprint must be 32 bytes")


@dataclass(frozen=True)
class Transaction:
    chain_id: ChainId
    contract: str
    operation: str
    args: tuple[tuple[str, bytes], ...]
    submitter: str
    nonce: int
    _canonical: bytes = field(init=False, repr=False, compare=False)
    tx_id: bytes = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        canonical = kernel.tx_canonical(
            int(self.chain_id), self.contract, self.operation,
            self.args, self.submitter, self.nonce,
        )
        object.__setattr__(self, "_canonical", canonical)
        object.__setattr__(self, "tx_id", kernel.sha256(canonical))

    @property
    def canonical(self) -> bytes:
        return self._canonical

    def arg(self, key: str) -> Optional[bytes]:
        for k, v in self.args:
            if k == key:
                return v
        return None


STATUS_OK = 0
STATUS_FAILED = 1


@dataclass(frozen=True)
class CommittedTx:
    tx: Transaction
    commit_time: int
    submitter_role: Role
    status: int
    error: str

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def record(self) -> bytes:
        return kernel.committed_record(
            self.tx.canonical, self.commit_time, int(self.submitter_role),
            self.status, self.error,
        )

    @classmethod
    def from_wire(cls, w: wire.CommittedTxWire) -> "CommittedTx":
        tx = Transaction(
            chain_id=ChainId(w.tx.chain),
            contract=w.tx.contract,
            operation=w.tx.operation,
            args=w.tx.args,
            submitter=w.tx.submitter,
            nonce=w.tx.nonce,
        )
        return cls(tx, w.commit_time, Role(w.role), w.status, w.error)


@dataclass(frozen=True)
class Block:
    chain_id: ChainId
    height: int
    prev_hash: bytes
    tx_root: bytes
    state_digest: bytes
    timestamp: int
    txs: tuple[CommittedTx, ...]

    def body(self) -> bytes:
        return kernel.block_body(
            int(self.chain_id), self.height, self.prev_hash, self.tx_root,
            self.state_digest, self.timestamp, [t.record() for t in self.txs],
        )

    def block_hash(self) -> bytes:
        return kernel.sha256(self.body())

    @classmethod
    def genesis(cls, chain_id: ChainId) -> "Block":
        return cls(
            chain_id=chain_id,
            height=0,
            prev_hash=wire.ZERO32,
            tx_root=kernel.tx_root([]),
            state_digest=kernel.genesis_digest(int(chain_id)),
            timestamp=0,
            txs=(),
        )

    @classmethod
    def from_body(cls, body: bytes) -> "Block":
        w = wire.decode_block(body)
        return cls(
            chain_id=ChainId(w.chain),
            height=w.height,
            prev_hash=w.prev_hash,
            tx_root=w.tx_root,
            state_digest=w.state_digest,
            timestamp=w.timestamp,
            txs=tuple(CommittedTx.from_wire(t) for t in w.txs),
        )


@dataclass(frozen=True)
class VerifyReport:
    chain_id: ChainId
    ok: bool
    first_bad_height: Optional[int] = None
    detail: str = ""


@dataclass(frozen=True)
class RegistrationReceipt:
    org_id: str
    role: Role
    cert_fingerprint: bytes
    chains: tuple[ChainId, ...]


@dataclass(frozen=True)
class AnchorRecord:
    sub_chain: ChainId
    anchored_height: int
    block_hash: bytes


@dataclass(frozen=True)
class IndexRecord:
    key: str
    sub_chain: ChainId
    tx_id: bytes
    height: int
