"""Single-chain engine: ordering, deterministic contract execution, and
hash-linked block storage.

Each chain owns exactly one commit loop; all mutation of the chain's log and
world state is serialized through ``flush``. Submissions and reads may arrive
concurrently from any number of threads. In "manual" drive mode blocks are
produced only when ``flush`` is called (deterministic tests, scenario runs);
in "auto" mode a background thread flushes on batch-size or interval
triggers.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from chaintrace import kernel
from chaintrace.errors import ChainTraceError, ContractError
from chaintrace.kernel import wire
from chaintrace.ledger.types import (
    Block,
    ChainId,
    CommittedTx,
    Role,
    STATUS_FAILED,
    STATUS_OK,
    Transaction,
)

DEFAULT_BATCH_SIZE = 500
DEFAULT_FLUSH_INTERVAL = 0.050
MAX_DIGEST_ARG_BYTES = 64


@dataclass(frozen=True)
class EventSpec:
    """Event emitted by a contract, pending publication after commit."""

    topic: str
    key: str
    payload: tuple[tuple[str, str], ...]
    source_tx: bytes


@dataclass(frozen=True)
class IndexFlag:
    key: str
    tx_id: bytes
    height: int


class PendingTx:
    """Submission receipt and commit future. status starts Pending."""

    def __init__(self, tx: Transaction):
        self.tx = tx
        self.tx_id = tx.tx_id
        self._done = threading.Event()
        self.height: Optional[int] = None
        self.error: Optional[ContractError] = None
        self.result: dict[str, str] = {}

    @property
    def status(self) -> str:
        if not self._done.is_set():
            return "Pending"
        return "Failed" if self.error else "Committed"

    def _resolve(self, height: int, error: Optional[ContractError],
                 result: Optional[dict[str, str]]) -> None:
        self.height = height
        self.error = error
        self.result = result or {}
        self._done.set()

    def wait(self, timeout: Optional[float] = None) -> "PendingTx":
        if not self._done.wait(timeout):
            raise ChainTraceError("Timeout", "transaction not committed in time")
        return self

    def outcome(self) -> dict[str, str]:
        """Result payload of a committed tx; raises the contract error if it
        failed. Only valid after commit (wait() first in auto mode)."""
        if not self._done.is_set():
            raise ChainTraceError("Timeout", "transaction still pending")
        if self.error is not None:
            raise self.error
        return self.result


class TxContext:
    """Execution context handed to a contract operation.

    Reads and writes are confined to the contract's own namespace
    (``<contract>/<key>``); emitted events and index flags take effect only
    if the operation succeeds.
    """

    __slots__ = ("_state", "_overlay", "_ns", "tx", "commit_time", "height",
                 "submitter", "role", "tx_id", "writes", "events", "flags",
                 "result", "_args")

    def __init__(self, state: dict, overlay: dict, ns: str, tx: Transaction,
                 commit_time: int, height: int, role: Role):
        self._state = state
        self._overlay = overlay
        self._ns = ns + "/"
        self.tx = tx
        self.tx_id = tx.tx_id
        self.submitter = tx.submitter
        self.role = role
        self.commit_time = commit_time
        self.height = height
        self.writes: dict[str, bytes] = {}
        self.events: list[EventSpec] = []
        self.flags: list[str] = []
        self.result: dict[str, str] = {}
        self._args = dict(tx.args)

    # -- args ------------------------------------------------------------
    def arg(self, name: str) -> bytes:
        try:
            return self._args[name]
        except KeyError:
            raise ContractError("MalformedArgs", f"missing arg {name!r}") from None

    def arg_str(self, name: str) -> str:
        try:
            return self.arg(name).decode("utf-8")
        except UnicodeDecodeError:
            raise ContractError("MalformedArgs", f"arg {name!r} is not utf-8") from None

    def arg_uint(self, name: str) -> int:
        raw = self.arg_str(name)
        if not raw.isdigit():
            raise ContractError("MalformedArgs", f"arg {name!r} is not an unsigned int")
        return int(raw)

    def has_arg(self, name: str) -> bool:
        return name in self._args

    # -- state -----------------------------------------------------------
    def get(self, key: str) -> Optional[bytes]:
        nskey = self._ns + key
        if nskey in self.writes:
            return self.writes[nskey]
        if nskey in self._overlay:
            return self._overlay[nskey]
        return self._state.get(nskey)

    def put(self, key: str, value: bytes) -> None:
        self.writes[self._ns + key] = value

    # -- effects ---------------------------------------------------------
    def emit(self, topic: str, key: str, payload: dict[str, str]) -> None:
        self.events.append(EventSpec(topic, key, tuple(sorted(payload.items())),
                                     self.tx_id))

    def flag_index(self, key: str) -> None:
        self.flags.append(key)

    def set_result(self, **fields: str) -> None:
        self.result.update(fields)


@dataclass
class ReplayResult:
    ok: bool
    first_bad_height: Optional[int] = None
    detail: str = ""
    state: dict = field(default_factory=dict)
    height: int = 0
    tip_hash: bytes = b""
    state_digest: bytes = b""
    clock: int = 0
    nonces: dict = field(default_factory=dict)
    flagged: list = field(default_factory=list)
    blocks_tx_count: int = 0


def execute_tx(contracts: dict, state: dict, overlay: dict, tx: Transaction,
               commit_time: int, height: int, role: Role):
    """Run one tx against state+overlay. Returns (committed, ctx-or-None)."""
    ctx = TxContext(state, overlay, tx.contract, tx, commit_time, height, role)
    contract = contracts.get(tx.contract)
    try:
        if contract is None:
            # submit-side validation normally prevents this; replay of logs
            # produced by a differently-configured engine lands here
            raise ContractError("MalformedArgs", f"no contract {tx.contract!r}")
        contract.execute(tx.operation, ctx)
    except ContractError as err:
        return CommittedTx(tx, commit_time, role, STATUS_FAILED, err.code), None, err
    overlay.update(ctx.writes)
    return CommittedTx(tx, commit_time, role, STATUS_OK, ""), ctx, None


def replay_records(chain_id: ChainId, records: list[tuple[bytes, bytes]],
                   contracts: dict) -> ReplayResult:
    """Rebuild world state from a block log, verifying every invariant that
    the log can witness: structural hashes, linkage, heights, timestamps,
    re-executed statuses, and state digests."""
    res = ReplayResult(ok=True)
    if not records:
        res.ok = False
        res.first_bad_height = 0
        res.detail = "missing genesis block"
        return res

    expected_genesis = Block.genesis(chain_id)
    prev_hash = b""
    for i, (body, stored_hash) in enumerate(records):
        rc = kernel.block_struct_verify(body, stored_hash)
        if rc != kernel.VERIFY_OK:
            reason = {
                kernel.VERIFY_MALFORMED: "malformed block record",
                kernel.VERIFY_TXROOT_MISMATCH: "tx root mismatch",
                kernel.VERIFY_HASH_MISMATCH: "block hash mismatch",
            }[rc]
            return ReplayResult(False, i, reason)
        try:
            w = wire.decode_block(body)
        except wire.WireError as exc:
            return ReplayResult(False, i, f"undecodable block: {exc}")
        if w.chain != int(chain_id):
            return ReplayResult(False, i, "block belongs to another chain")
        if w.height != i:
            return ReplayResult(False, i, "height out of sequence")
        if i == 0:
            if body != expected_genesis.body():
                return ReplayResult(False, 0, "genesis block mismatch")
            res.state_digest = w.state_digest
            res.tip_hash = stored_hash
            prev_hash = stored_hash
            continue
        if w.prev_hash != prev_hash:
            return ReplayResult(False, i, "broken hash link")
        if not w.txs:
            return ReplayResult(False, i, "empty block")
        overlay: dict[str, bytes] = {}
        clock = res.clock
        for t in w.txs:
            clock += 1
            if t.commit_time != clock:
                return ReplayResult(False, i, "commit time out of sequence")
            tx = Transaction(ChainId(t.tx.chain), t.tx.contract,
                             t.tx.operation, t.tx.args, t.tx.submitter,
                             t.tx.nonce)
            committed, ctx, _err = execute_tx(
                contracts, res.state, overlay, tx, t.commit_time, i,
                Role(t.role))
            if committed.status != t.status or committed.error != t.error:
                return ReplayResult(False, i, "execution outcome mismatch")
            if ctx is not None:
                for key in ctx.flags:
                    res.flagged.append(IndexFlag(key, tx.tx_id, i))
            last = res.nonces.get(tx.submitter, -1)
            res.nonces[tx.submitter] = max(last, tx.nonce)
        if w.timestamp != clock:
            return ReplayResult(False, i, "block timestamp mismatch")
        digest = kernel.state_digest_update(res.state_digest, list(overlay.items()))
        if digest != w.state_digest:
            return ReplayResult(False, i, "state digest mismatch")
        res.state.update(overlay)
        res.state_digest = digest
        res.clock = clock
        res.tip_hash = stored_hash
        res.blocks_tx_count += len(w.txs)
        prev_hash = stored_hash
    res.height = len(records) - 1
    return res


class Chain:
    def __init__(
        self,
        chain_id: ChainId,
        contracts: dict,
        log,
        role_of: Callable[[str], Role],
        batch_size: int = DEFAULT_BATCH_SIZE,
        flush_interval: float = DEFAULT_FLUSH_INTERVAL,
    ):
        self.chain_id = chain_id
        self.contracts = contracts
        self.log = log
        self.batch_size = batch_size
        self.flush_interval = flush_interval
        self._role_of = role_of
        self._pending: deque[tuple[Transaction, PendingTx]] = deque()
        self._submit_lock = threading.Lock()
        self._commit_lock = threading.RLock()
        self._state_lock = threading.Lock()
        self._cond = threading.Condition(self._submit_lock)
        self._nonces: dict[str, int] = {}
        self._state: dict[str, bytes] = {}
        self._flagged: list[IndexFlag] = []
        self._height = 0
        self._tip_hash = b""
        self._state_digest = b""
        self._clock = 0
        self.on_events: Optional[Callable[[ChainId, list[EventSpec]], None]] = None
        self.on_block: Optional[Callable[["Chain", Block], None]] = None
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        self._bootstrap()

    def _bootstrap(self) -> None:
        records = self.log.records()
        if not records:
            genesis = Block.genesis(self.chain_id)
            body = genesis.body()
            self.log.append(body, kernel.sha256(body))
            self._tip_hash = kernel.sha256(body)
            self._state_digest = genesis.state_digest
            return
        result = replay_records(self.chain_id, records, self.contracts)
        if not result.ok:
            raise ChainTraceError(
                "UnknownChain",
                f"{self.chain_id.label} log fails verification at height "
                f"{result.first_bad_height}: {result.detail}")
        self._state = result.state
        self._height = result.height
        self._tip_hash = result.tip_hash
        self._state_digest = result.state_digest
        self._clock = result.clock
        self._nonces = dict(result.nonces)
        self._flagged = list(result.flagged)

    # -- intake ------------------------------------------------------------
    def _validate(self, tx: Transaction) -> None:
        if tx.contract not in self.contracts:
            raise ChainTraceError("UnknownContract",
                                  f"{tx.contract!r} not deployed on "
                                  f"{self.chain_id.label}")
        digest_args = self.contracts[tx.contract].digest_args(tx.operation)
        for key, value in tx.args:
            if key in digest_args and len(value) > MAX_DIGEST_ARG_BYTES:
                raise ChainTraceError(
                    "OversizedDigestArg",
                    f"arg {key!r} is digest-typed; store the document in the "
                    f"blob store and submit its digest")

    def submit(self, tx: Transaction) -> PendingTx:
        self._validate(tx)
        handle = PendingTx(tx)
        with self._submit_lock:
            last = self._nonces.get(tx.submitter, -1)
            if tx.nonce <= last:
                raise ChainTraceError(
                    "StaleNonce",
                    f"nonce {tx.nonce} <= last accepted {last} for "
                    f"{tx.submitter} on {self.chain_id.label}")
            self._nonces[tx.submitter] = tx.nonce
            self._pending.append((tx, handle))
            self._cond.notify_all()
        return handle

    def submit_auto(self, submitter: str,
                    factory: Callable[[int], Transaction]) -> PendingTx:
        """Allocate the next nonce and enqueue atomically (safe under
        concurrent submitters sharing one identity)."""
        with self._submit_lock:
            nonce = self._nonces.get(submitter, -1) + 1
            tx = factory(nonce)
            self._validate(tx)
            handle = PendingTx(tx)
            self._nonces[submitter] = nonce
            self._pending.append((tx, handle))
            self._cond.notify_all()
        return handle

    def pending_count(self) -> int:
        with self._submit_lock:
            return len(self._pending)

    # -- commit loop ---------------------------------------------------------
    def flush(self) -> Optional[Block]:
        """Produce one block from pending transactions (no empty blocks)."""
        with self._commit_lock:
            with self._submit_lock:
                if not self._pending:
                    return None
                take = min(len(self._pending), self.batch_size)
                batch = [self._pending.popleft() for _ in range(take)]
            height = self._height + 1
            clock = self._clock
            overlay: dict[str, bytes] = {}
            committed: list[CommittedTx] = []
            outcomes = []
            events: list[EventSpec] = []
            flagged: list[IndexFlag] = []
            for tx, handle in batch:
                clock += 1
                role = self._role_of(tx.submitter)
                ctx_committed, ctx, err = execute_tx(
                    self.contracts, self._state, overlay, tx, clock, height, role)
                committed.append(ctx_committed)
                if ctx is not None:
                    events.extend(ctx.events)
                    flagged.extend(IndexFlag(k, tx.tx_id, height) for k in ctx.flags)
                    outcomes.append((handle, None, ctx.result))
                else:
                    outcomes.append((handle, err, None))
            txroot = kernel.tx_root([c.tx.tx_id for c in committed])
            new_digest = kernel.state_digest_update(
                self._state_digest, list(overlay.items()))
            block = Block(self.chain_id, height, self._tip_hash, txroot,
                          new_digest, clock, tuple(committed))
            body = block.body()
            block_hash = kernel.sha256(body)
            self.log.append(body, block_hash)
            with self._state_lock:
                self._state.update(overlay)
                self._height = height
                self._tip_hash = block_hash
                self._state_digest = new_digest
                self._clock = clock
            self._flagged.extend(flagged)
        for handle, err, result in outcomes:
            handle._resolve(height, err, result)
        if events and self.on_events is not None:
            self.on_events(self.chain_id, events)
        if self.on_block is not None:
            self.on_block(self, block)
        return block

    def drain(self) -> int:
        """Flush until no pending transactions remain. Returns block count."""
        n = 0
        while self.flush() is not None:
            n += 1
        return n

    # -- reads ---------------------------------------------------------------
    def read(self, key: str) -> Optional[bytes]:
        with self._state_lock:
            return self._state.get(key)

    def scan(self, prefix: str) -> list[tuple[str, bytes]]:
        with self._state_lock:
            items = [(k, v) for k, v in self._state.items()
                     if k.startswith(prefix)]
        items.sort()
        return items

    @property
    def height(self) -> int:
        with self._state_lock:
            return self._height

    @property
    def tip_hash(self) -> bytes:
        with self._state_lock:
            return self._tip_hash

    @property
    def state_digest(self) -> bytes:
        with self._state_lock:
            return self._state_digest

    def state_snapshot(self) -> dict[str, bytes]:
        with self._state_lock:
            return dict(self._state)

    def flagged_since(self, height: int) -> list[IndexFlag]:
        with self._commit_lock:
            return [f for f in self._flagged if f.height > height]

    # -- auto drive ------------------------------------------------------------
    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(
            target=self._drive, name=f"commit-{self.chain_id.label}", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        with self._cond:
            self._cond.notify_all()
        self._thread.join()
        self._thread = None
        self.drain()

    def _drive(self) -> None:
        import time as _time
        while not self._stop.is_set():
            with self._cond:
                while not self._pending and not self._stop.is_set():
                    self._cond.wait(timeout=0.5)
            if self._stop.is_set():
                break
            deadline = _time.monotonic() + self.flush_interval
            while _time.monotonic() < deadline:
                with self._submit_lock:
                    if len(self._pending) >= self.batch_size:
                        break
                _time.sleep(0.002)
            self.flush()
