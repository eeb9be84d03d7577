from chaintrace.ledger.types import (
    AnchorRecord,
    Block,
    ChainId,
    CommittedTx,
    IndexRecord,
    OrgId,
    Role,
    SUB_CHAINS,
    Transaction,
    VerifyReport,
)
from chaintrace.ledger.engine import LedgerEngine
from chaintrace.ledger.genesis import GenesisConfig

__all__ = [
    "AnchorRecord",
    "Block",
    "ChainId",
    "CommittedTx",
    "GenesisConfig",
    "IndexRecord",
    "LedgerEngine",
    "OrgId",
    "Role",
    "SUB_CHAINS",
    "Transaction",
    "VerifyReport",
]
