"""Majority-quorum ordering simulation."""

import pytest

from chaintrace.contracts import make_contract
from chaintrace.ledger.blocklog import MemoryBlockLog
from chaintrace.ledger.engine import LedgerEngine
from chaintrace.ledger.genesis import GenesisConfig
from chaintrace.ledger.quorum import QuorumLog, QuorumLostError
from chaintrace.ledger.types import ChainId


def test_append_replicates_to_live_followers():
    log = QuorumLog(MemoryBlockLog(), replicas=3)
    log.append(b"block-1", b"\x01" * 32)
    assert len(log) == 1
    for follower in log.followers:
        assert follower.log.records() == log.leader.records()


def test_minority_crash_tolerated():
    log = QuorumLog(MemoryBlockLog(), replicas=3)
    log.crash_follower(0)
    log.append(b"block-1", b"\x01" * 32)  # 2 of 3 acks, quorum met
    assert len(log.followers[0].log) == 0
    assert len(log.followers[1].log) == 1


def test_majority_loss_blocks_commit():
    log = QuorumLog(MemoryBlockLog(), replicas=3)
    log.crash_follower(0)
    log.crash_follower(1)
    with pytest.raises(QuorumLostError):
        log.append(b"block-1", b"\x01" * 32)
    assert len(log) == 0  # nothing committed anywhere


def test_restarted_follower_catches_up():
    log = QuorumLog(MemoryBlockLog(), replicas=3)
    log.crash_follower(0)
    log.append(b"block-1", b"\x01" * 32)
    log.append(b"block-2", b"\x02" * 32)
    log.restart_follower(0)
    assert log.followers[0].log.records() == log.leader.records()
    log.append(b"block-3", b"\x03" * 32)
    assert len(log.followers[0].log) == 3


def test_engine_runs_in_quorum_mode():
    config = GenesisConfig.from_dict({
        "orgs": [{"id": "acme", "role": "Member", "cert": "a",
                  "chains": ["Warehousing"]}],
        "ordering": {"mode": "quorum", "replicas": 3},
    })
    engine = LedgerEngine(config, make_contract)
    engine.submit(ChainId.WAREHOUSING, "warehousing", "produce",
                  [("batch", "B1"), ("qty", 5)], "acme")
    engine.chains[ChainId.WAREHOUSING].flush()
    log = engine.chains[ChainId.WAREHOUSING].log
    assert isinstance(log, QuorumLog)
    assert len(log) == 2  # genesis + one block, on every replica
    assert engine.verify_chain(ChainId.WAREHOUSING).ok
    for follower in log.followers:
        assert follower.log.records() == log.leader.records()
