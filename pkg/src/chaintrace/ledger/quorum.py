"""Majority-quorum replicated block log (optional ordering mode).

Simulates crash-fault-tolerant replication over N in-process replicas: the
leader appends, the record commits once ceil((N+1)/2) replicas (leader
included) acknowledge, and crashed followers catch up from the leader when
they restart. Leader election is out of scope; the leader is fixed.
"""

from __future__ import annotations

import math

from chaintrace.ledger.blocklog import MemoryBlockLog


class QuorumLostError(RuntimeError):
    pass


class _Follower:
    def __init__(self, log):
        self.log = log
        self.crashed = False


class QuorumLog:
    """Drop-in block log whose appends require a majority acknowledgement."""

    def __init__(self, leader_log, replicas: int = 3, follower_logs=None):
        if replicas < 1:
            raise ValueError("need at least one replica")
        self.leader = leader_log
        n_followers = replicas - 1
        if follower_logs is None:
            follower_logs = [MemoryBlockLog() for _ in range(n_followers)]
        if len(follower_logs) != n_followers:
            raise ValueError("follower log count must be replicas - 1")
        self.followers = [_Follower(log) for log in follower_logs]
        self.quorum = math.ceil((replicas + 1) / 2)
        for f in self.followers:
            self._catch_up(f)

    def _catch_up(self, follower: _Follower) -> None:
        have = len(follower.log)
        for body, block_hash in self.leader.records()[have:]:
            follower.log.append(body, block_hash)

    def append(self, body: bytes, block_hash: bytes) -> None:
        acks = 1 + sum(1 for f in self.followers if not f.crashed)
        if acks < self.quorum:
            raise QuorumLostError(
                f"only {acks} of {len(self.followers) + 1} replicas "
                f"reachable (need {self.quorum})")
        self.leader.append(body, block_hash)
        for f in self.followers:
            if not f.crashed:
                f.log.append(body, block_hash)

    def crash_follower(self, index: int) -> None:
        self.followers[index].crashed = True

    def restart_follower(self, index: int) -> None:
        f = self.followers[index]
        f.crashed = False
        self._catch_up(f)

    def records(self):
        return self.leader.records()

    def __len__(self) -> int:
        return len(self.leader)

    def close(self) -> None:
        self.leader.close()
        for f in self.followers:
            f.log.close()
