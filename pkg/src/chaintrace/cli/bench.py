"""Benchmark harness for the multi-chain parallelism claim.

Each active chain runs as its own OS process (share-nothing: one commit
loop, its own contracts and in-memory log) because distinct chains are
independent by design; process isolation is what makes the parallelism
measurable under CPython. Single-chain mode hosts all six domain contracts
on one chain, the baseline a single-blockchain deployment would use.

Throughput counts committed transactions inside the measurement window
(reads are reported separately); latency is sampled submit-to-commit time.
"""

from __future__ import annotations

import multiprocessing as mp
import os
import threading
import time
from collections import deque
from typing import Optional

from chaintrace.errors import ChainTraceError
from chaintrace.cli.workload import (
    DOMAINS,
    WorkloadMix,
    assign_lanes,
    generate,
    seed_ops,
)

REFERENCE_NOTE = (
    "reference only, not comparable: the original Fabric prototype reported "
    "~2800 TPS query throughput at ~1.4 s average latency on unspecified "
    "hardware")

_LANE_CHAIN = {
    "user_authority": 1, "enterprise": 2, "warehousing": 3,
    "inventory": 4, "supervision": 5, "traceability": 6,
}


def _percentile(samples: list[float], q: float) -> float:
    if not samples:
        return 0.0
    ordered = sorted(samples)
    idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
    return ordered[idx]


def _lane_worker(lane_index: int, domains: list[str], mix_dict: dict,
                 seed: int, duration: float, conn) -> None:
    import random

    from chaintrace import kernel
    from chaintrace.contracts import make_contract
    from chaintrace.kernel import wire
    from chaintrace.ledger.blocklog import MemoryBlockLog
    from chaintrace.ledger.chain import Chain
    from chaintrace.ledger.types import ChainId, Role, Transaction

    mix = WorkloadMix(**mix_dict)
    chain_id = ChainId(_LANE_CHAIN[domains[0]])
    contracts = {name: make_contract(name) for name in domains}
    chain = Chain(chain_id, contracts, MemoryBlockLog(),
                  role_of=lambda org: Role.MEMBER)
    blocks: list[tuple[float, int]] = []
    chain.on_block = lambda _ch, block: blocks.append(
        (time.monotonic(), len(block.txs)))

    nonce = 0

    def submit(domain: str, op: str, args) -> object:
        nonlocal nonce
        nonce += 1
        tx = Transaction(chain_id=chain_id, contract=domain, operation=op,
                         args=tuple((k, v.encode("utf-8")) for k, v in args),
                         submitter="bench", nonce=nonce)
        return chain.submit(tx)

    # latency sampling: a collector thread waits on sampled handles
    samples: deque = deque()
    write_lat_ms: list[float] = []
    done = threading.Event()

    def collect() -> None:
        while not done.is_set() or samples:
            try:
                handle, t0 = samples.popleft()
            except IndexError:
                time.sleep(0.002)
                continue
            handle._done.wait(timeout=10.0)
            write_lat_ms.append((time.monotonic() - t0) * 1000.0)

    collector = threading.Thread(target=collect, daemon=True)
    collector.start()
    chain.start()

    # seed fixture state so reads have something to hit
    for domain in domains:
        for op in seed_ops(mix, domain):
            submit(domain, op.op, op.args)
    while chain.pending_count():
        time.sleep(0.005)

    gens = {d: generate(mix, d, seed) for d in domains}
    chooser = random.Random(f"{seed}:lane{lane_index}")
    weights = [mix.domain_weights.get(d, 1.0) for d in domains]
    reads = 0
    writes = 0
    read_lat_ms: list[float] = []
    t0 = time.monotonic()
    deadline = t0 + duration
    i = 0
    while time.monotonic() < deadline:
        domain = chooser.choices(domains, weights=weights, k=1)[0]
        op = next(gens[domain])
        if op.kind == "read":
            r0 = time.monotonic()
            chain.read(op.args[0])
            reads += 1
            if reads % 64 == 0:
                read_lat_ms.append((time.monotonic() - r0) * 1000.0)
        else:
            handle = submit(domain, op.op, op.args)
            writes += 1
            if writes % 64 == 0:
                samples.append((handle, time.monotonic()))
        i += 1
        if i % 256 == 0 and chain.pending_count() > 4000:
            time.sleep(0.002)
    t_end = time.monotonic()
    chain.stop()
    done.set()
    collector.join(timeout=15.0)

    committed_window = sum(n for ts, n in blocks if ts <= t_end)
    failed = sum(1 for body, _h in chain.log.records()[1:]
                 for t in wire.decode_block(body).txs if t.status != 0)
    conn.send({
        "lane": lane_index,
        "chain": chain_id.label,
        "domains": domains,
        "committed_in_window": committed_window,
        "committed_total": sum(n for _ts, n in blocks),
        "failed_tx": failed,
        "writes_submitted": writes,
        "reads": reads,
        "write_lat_ms": write_lat_ms,
        "read_lat_ms": read_lat_ms,
        "kernel_backend": kernel.BACKEND,
    })
    conn.close()


def run_bench(chains: int, mix: WorkloadMix, duration: float, seed: int,
              codec: str = "auto") -> dict:
    if duration <= 0:
        raise ChainTraceError("InvalidWorkload", "duration must be positive")
    mix.validate()
    lanes = assign_lanes(chains)
    ctx = mp.get_context("spawn")
    saved_env = os.environ.get("CHAINTRACE_KERNEL")
    if codec != "auto":
        os.environ["CHAINTRACE_KERNEL"] = codec
    try:
        pipes = []
        procs = []
        for index, domains in enumerate(lanes):
            parent_conn, child_conn = ctx.Pipe(duplex=False)
            proc = ctx.Process(
                target=_lane_worker,
                args=(index, domains, mix.describe(), seed, duration,
                      child_conn),
                daemon=True)
            proc.start()
            child_conn.close()
            pipes.append(parent_conn)
            procs.append(proc)
        lane_reports = []
        for conn, proc in zip(pipes, procs):
            if conn.poll(duration + 60.0):
                lane_reports.append(conn.recv())
            proc.join(timeout=30.0)
    finally:
        if saved_env is None:
            os.environ.pop("CHAINTRACE_KERNEL", None)
        else:
            os.environ["CHAINTRACE_KERNEL"] = saved_env
    if len(lane_reports) != len(lanes):
        raise RuntimeError("one or more bench lanes died without reporting")

    committed = sum(r["committed_in_window"] for r in lane_reports)
    reads = sum(r["reads"] for r in lane_reports)
    write_lat = [v for r in lane_reports for v in r["write_lat_ms"]]
    read_lat = [v for r in lane_reports for v in r["read_lat_ms"]]
    return {
        "mode": "single-chain" if chains == 1 else "multi-chain",
        "chains": chains,
        "workload": mix.describe(),
        "seed": seed,
        "duration_s": duration,
        "throughput_tps": committed / duration,
        "committed_tx": committed,
        "reads_per_s": reads / duration,
        "latency_ms": {
            "p50": _percentile(write_lat, 0.50),
            "p95": _percentile(write_lat, 0.95),
            "p99": _percentile(write_lat, 0.99),
        },
        "read_latency_ms": {
            "p50": _percentile(read_lat, 0.50),
            "p95": _percentile(read_lat, 0.95),
            "p99": _percentile(read_lat, 0.99),
        },
        "kernel_backend": lane_reports[0]["kernel_backend"],
        "lanes": lane_reports_summary(lane_reports),
        "reference_note": REFERENCE_NOTE,
    }


def lane_reports_summary(lane_reports: list[dict]) -> list[dict]:
    return [{k: r[k] for k in ("lane", "chain", "domains",
                               "committed_in_window", "committed_total",
                               "failed_tx", "writes_submitted", "reads")}
            for r in lane_reports]


def format_report(report: dict) -> str:
    lines = [
        f"mode: {report['mode']} ({report['chains']} chain(s)), "
        f"kernel={report['kernel_backend']}, seed={report['seed']}",
        f"duration: {report['duration_s']:.1f}s   committed: "
        f"{report['committed_tx']} tx   throughput: "
        f"{report['throughput_tps']:.0f} tx/s   reads: "
        f"{report['reads_per_s']:.0f}/s",
        f"commit latency ms p50/p95/p99: "
        f"{report['latency_ms']['p50']:.1f}/"
        f"{report['latency_ms']['p95']:.1f}/"
        f"{report['latency_ms']['p99']:.1f}",
    ]
    for lane in report["lanes"]:
        lines.append(
            f"  lane {lane['lane']} [{lane['chain']}] "
            f"{'+'.join(lane['domains'])}: "
            f"{lane['committed_in_window']} tx, {lane['reads']} reads")
    lines.append(f"note: {report['reference_note']}")
    return "\n".join(lines)
