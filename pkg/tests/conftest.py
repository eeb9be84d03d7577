import pytest

from chaintrace.domains.system import TraceSystem
from chaintrace.ledger.chain import Chain
from chaintrace.ledger.blocklog import MemoryBlockLog
from chaintrace.ledger.genesis import salmon_genesis
from chaintrace.ledger.types import ChainId, Role, Transaction
from chaintrace.contracts import make_contract


@pytest.fixture
def system():
    sys_ = TraceSystem(salmon_genesis())
    yield sys_
    sys_.close()


@pytest.fixture
def logins(system):
    out = {}
    for org in ("farm", "exporter", "importer", "processor", "distributor",
                "retailer"):
        out[org] = system.login(f"{org}.clerk", f"{org}-secret")
    out["quarantine"] = system.login("quarantine.inspector",
                                     "quarantine-secret")
    return out


class ContractHarness:
    """One chain, direct submission, manual flush: contract unit testing."""

    def __init__(self, *contract_names, chain_id=ChainId.WAREHOUSING,
                 roles=None):
        self.chain_id = chain_id
        self.roles = roles or {}
        self.chain = Chain(
            chain_id,
            {name: make_contract(name) for name in contract_names},
            MemoryBlockLog(),
            role_of=lambda org: self.roles.get(org, Role.MEMBER),
        )
        self._nonces = {}
        self.events = []
        self.chain.on_events = lambda _c, evs: self.events.extend(evs)

    def call(self, contract, op, args, submitter="acme"):
        """Submit, commit, and return the result dict; raises the contract
        error if the operation failed."""
        nonce = self._nonces.get(submitter, 0) + 1
        self._nonces[submitter] = nonce
        tx = Transaction(
            chain_id=self.chain_id, contract=contract, operation=op,
            args=tuple((k, v if isinstance(v, bytes) else str(v).encode())
                       for k, v in args),
            submitter=submitter, nonce=nonce)
        handle = self.chain.submit(tx)
        self.chain.flush()
        return handle.outcome()

    def get(self, key):
        return self.chain.read(key)
