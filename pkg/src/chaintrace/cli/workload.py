"""Synthetic benchmark workload: deterministic per-domain op streams.

A workload mix describes the global read/write split and the relative
weight of each domain. The generator is a pure function of (mix, domain,
seed): identical seeds produce identical op sequences, which is what makes
single-chain and multi-chain runs comparable.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from chaintrace.errors import ChainTraceError

DOMAINS = ("user_authority", "enterprise", "warehousing", "inventory",
           "supervision", "traceability")


@dataclass(frozen=True)
class WorkloadMix:
    read_fraction: float = 0.7
    domain_weights: dict = field(
        default_factory=lambda: {d: 1.0 for d in DOMAINS})
    batch_pool: int = 32
    seed_writes: int = 200

    def validate(self) -> "WorkloadMix":
        if not (0.0 <= self.read_fraction < 1.0):
            raise ChainTraceError("InvalidWorkload",
                                  "read_fraction must be in [0, 1)")
        if not self.domain_weights:
            raise ChainTraceError("InvalidWorkload", "no domains in mix")
        for domain, weight in self.domain_weights.items():
            if domain not in DOMAINS:
                raise ChainTraceError("InvalidWorkload",
                                      f"unknown domain {domain!r}")
            if weight <= 0:
                raise ChainTraceError("InvalidWorkload",
                                      f"weight for {domain} must be positive")
        if self.batch_pool < 1 or self.seed_writes < 1:
            raise ChainTraceError("InvalidWorkload",
                                  "batch_pool and seed_writes must be >= 1")
        return self

    @classmethod
    def load(cls, path: Optional[Path]) -> "WorkloadMix":
        if path is None:
            return cls().validate()
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ChainTraceError("InvalidWorkload",
                                  f"cannot read mix file: {exc}") from None
        return cls(
            read_fraction=float(raw.get("read_fraction", 0.7)),
            domain_weights={str(k): float(v) for k, v in
                            raw.get("domain_weights",
                                    {d: 1.0 for d in DOMAINS}).items()},
            batch_pool=int(raw.get("batch_pool", 32)),
            seed_writes=int(raw.get("seed_writes", 200)),
        ).validate()

    def describe(self) -> dict:
        return {"read_fraction": self.read_fraction,
                "domain_weights": dict(self.domain_weights),
                "batch_pool": self.batch_pool,
                "seed_writes": self.seed_writes}


@dataclass(frozen=True)
class Op:
    domain: str
    kind: str  # "read" | "write"
    op: str
    args: tuple


def _write_op(domain: str, i: int, rng: random.Random, pool: int) -> Op:
    batch = f"B{rng.randrange(pool)}"
    if domain == "warehousing":
        return Op(domain, "write", "produce",
                  (("batch", batch), ("qty", str(rng.randrange(1, 50)))))
    if domain == "inventory":
        return Op(domain, "write", "apply_produced",
                  (("event", f"ev-{domain}-{i}"), ("batch", batch),
                   ("org", f"org{rng.randrange(8)}"),
                   ("qty", str(rng.randrange(1, 50)))))
    if domain == "traceability":
        return Op(domain, "write", "note_outbound",
                  (("event", f"ev-{domain}-{i}"), ("batch", batch),
                   ("from", f"org{rng.randrange(8)}"),
                   ("to", f"org{rng.randrange(8)}"),
                   ("qty", str(rng.randrange(1, 50))),
                   ("outbound_tx", f"{i:064d}"[:64]),
                   ("token", f"tok-{i}"), ("time", str(i + 1))))
    if domain == "supervision":
        return Op(domain, "write", "ingest",
                  (("event", f"ev-{domain}-{i}"), ("source", "bench"),
                   ("actor", f"org{rng.randrange(8)}"), ("action", "bench"),
                   ("subject", batch), ("time", str(i + 1))))
    if domain == "user_authority":
        return Op(domain, "write", "register_user",
                  (("user", f"user-{domain}-{i}"),
                   ("org", f"org{rng.randrange(8)}"), ("role", "Member"),
                   ("cred_digest", f"{i:064x}"[-64:])))
    if domain == "enterprise":
        return Op(domain, "write", "register_enterprise",
                  (("org", f"ent-{domain}-{i}"), ("name", f"Enterprise {i}")))
    raise AssertionError(domain)


def _read_key(domain: str, rng: random.Random, pool: int,
              seeded: int) -> str:
    batch = f"B{rng.randrange(pool)}"
    if domain == "warehousing":
        return f"warehousing/hold:{batch}:bench"
    if domain == "inventory":
        return f"inventory/stock:{batch}:org{rng.randrange(8)}:InStock"
    if domain == "traceability":
        return f"traceability/hopn:{batch}"
    if domain == "supervision":
        return f"supervision/audit:{rng.randrange(max(seeded, 1)):010d}"
    if domain == "user_authority":
        return f"user_authority/user:user-{domain}-{rng.randrange(max(seeded, 1))}"
    if domain == "enterprise":
        return f"enterprise/ent:ent-{domain}-{rng.randrange(max(seeded, 1))}"
    raise AssertionError(domain)


def generate(mix: WorkloadMix, domain: str, seed: int) -> Iterator[Op]:
    """Infinite deterministic op stream for one domain."""
    rng = random.Random(f"{seed}:{domain}")
    i = mix.seed_writes  # seed phase used ids [0, seed_writes)
    while True:
        if rng.random() < mix.read_fraction:
            yield Op(domain, "read", "read",
                     (_read_key(domain, rng, mix.batch_pool,
                                mix.seed_writes),))
        else:
            yield _write_op(domain, i, rng, mix.batch_pool)
            i += 1


def seed_ops(mix: WorkloadMix, domain: str) -> list[Op]:
    """Fixture writes so the read side has committed state to hit."""
    rng = random.Random(f"seed:{domain}")
    return [_write_op(domain, i, rng, mix.batch_pool)
            for i in range(mix.seed_writes)]


def assign_lanes(chains: int) -> list[list[str]]:
    """Distribute the six domains over N chain lanes, round-robin."""
    if not (1 <= chains <= len(DOMAINS)):
        raise ChainTraceError("InvalidWorkload",
                              f"chains must be 1..{len(DOMAINS)}")
    lanes: list[list[str]] = [[] for _ in range(chains)]
    for i, domain in enumerate(DOMAINS):
        lanes[i % chains].append(domain)
    return lanes
