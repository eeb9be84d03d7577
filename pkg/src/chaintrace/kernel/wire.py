"""Decoders for the on-chain wire format (cold path, shared by both backends)."""

from __future__ import annotations

import struct
from typing import NamedTuple

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")

ZERO32 = b"\x00" * 32


class WireError(ValueError):
    pass


class _Reader:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise WireError("truncated record")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def lp_bytes(self) -> bytes:
        return self.take(self.u32())

    def lp_str(self) -> str:
        raw = self.lp_bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireError("invalid utf-8") from exc

    def done(self) -> bool:
        return self.pos == len(self.buf)


class TxWire(NamedTuple):
    chain: int
    contract: str
    operation: str
    args: tuple[tuple[str, bytes], ...]
    submitter: str
    nonce: int


class CommittedTxWire(NamedTuple):
    canonical: bytes
    tx: TxWire
    commit_time: int
    role: int
    status: int
    error: str


class BlockWire(NamedTuple):
    chain: int
    height: int
    prev_hash: bytes
    tx_root: bytes
    state_digest: bytes
    timestamp: int
    txs: tuple[CommittedTxWire, ...]


class EventWire(NamedTuple):
    topic: str
    key: str
    source_chain: int
    source_tx: bytes
    payload: tuple[tuple[str, bytes], ...]


def decode_tx_canonical(canonical: bytes) -> TxWire:
    r = _Reader(canonical)
    chain = r.u8()
    contract = r.lp_str()
    operation = r.lp_str()
    nargs = r.u32()
    args = tuple((r.lp_str(), r.lp_bytes()) for _ in range(nargs))
    submitter = r.lp_str()
    nonce = r.u64()
    if not r.done():
        raise WireError("trailing bytes in tx")
    return TxWire(chain, contract, operation, args, submitter, nonce)


def _decode_committed(r: _Reader) -> CommittedTxWire:
    canonical = r.lp_bytes()
    commit_time = r.u64()
    role = r.u8()
    status = r.u8()
    error = r.lp_str()
    return CommittedTxWire(canonical, decode_tx_canonical(canonical),
                           commit_time, role, status, error)


def decode_block(body: bytes) -> BlockWire:
    r = _Reader(body)
    chain = r.u8()
    height = r.u64()
    prev_hash = r.take(32)
    txroot = r.take(32)
    state_digest = r.take(32)
    timestamp = r.u64()
    ntx = r.u32()
    txs = tuple(_decode_committed(r) for _ in range(ntx))
    if not r.done():
        raise WireError("trailing bytes in block")
    return BlockWire(chain, height, prev_hash, txroot, state_digest,
                     timestamp, txs)


def decode_event(payload: bytes) -> tuple[int, EventWire]:
    """Bus log payload: u64 seq followed by the event canonical bytes."""
    r = _Reader(payload)
    seq = r.u64()
    topic = r.lp_str()
    key = r.lp_str()
    source_chain = r.u8()
    source_tx = r.take(32)
    npairs = r.u32()
    pairs = tuple((r.lp_str(), r.lp_bytes()) for _ in range(npairs))
    if not r.done():
        raise WireError("trailing bytes in event")
    return seq, EventWire(topic, key, source_chain, source_tx, pairs)
