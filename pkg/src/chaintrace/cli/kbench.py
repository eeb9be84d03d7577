"""Microbenchmark comparing the compiled digest kernel with the pure-Python
fallback on the block sealing and verification hot paths."""

from __future__ import annotations

import random
import time

from chaintrace import kernel


def _time(fn, min_seconds: float = 0.2) -> tuple[float, int]:
    """Returns (seconds per call, calls made)."""
    calls = 0
    start = time.perf_counter()
    while True:
        fn()
        calls += 1
        elapsed = time.perf_counter() - start
        if elapsed >= min_seconds:
            return elapsed / calls, calls


def run_kernel_bench(tx_count: int = 500) -> dict:
    rng = random.Random(11)
    args = tuple(
        (f"k{i}", rng.randbytes(24)) for i in range(4))
    writes = [(f"ns/key:{i}", rng.randbytes(48)) for i in range(tx_count)]

    backends = {"py": kernel.backend("py")}
    try:
        backends["c"] = kernel.backend("c")
    except ImportError:
        pass

    results: dict = {"tx_count": tx_count, "backends": sorted(backends),
                     "ops": {}}
    prepared = {}
    for name, impl in backends.items():
        canons = [impl.tx_canonical(3, "warehousing", "record_outbound",
                                    args, "acme", i)
                  for i in range(tx_count)]
        ids, root = impl.seal_batch(canons)
        records = [impl.committed_record(c, i + 1, 0, 0, "")
                   for i, c in enumerate(canons)]
        body = impl.block_body(3, 1, b"\x00" * 32, root, b"\x01" * 32,
                               tx_count, records)
        prepared[name] = (canons, body, impl.sha256(body))

    def op_encode(impl):
        return lambda: [impl.tx_canonical(3, "warehousing",
                                          "record_outbound", args, "acme", i)
                        for i in range(tx_count)]

    def op_seal(impl, canons):
        return lambda: impl.seal_batch(canons)

    def op_digest(impl):
        return lambda: impl.state_digest_update(b"\x00" * 32, writes)

    def op_verify(impl, body, stored):
        return lambda: impl.block_struct_verify(body, stored)

    for op_name, make in (
        ("tx_canonical_batch", lambda n, i: op_encode(i)),
        ("seal_batch", lambda n, i: op_seal(i, prepared[n][0])),
        ("state_digest_update", lambda n, i: op_digest(i)),
        ("block_struct_verify", lambda n, i: op_verify(i, prepared[n][1],
                                                       prepared[n][2])),
    ):
        row = {}
        for name, impl in backends.items():
            per_call, _calls = _time(make(name, impl))
            row[name] = {"seconds_per_call": per_call,
                         "tx_per_second": tx_count / per_call}
        if "c" in row:
            row["speedup_c_over_py"] = (
                row["py"]["seconds_per_call"] / row["c"]["seconds_per_call"])
        results["ops"][op_name] = row
    return results


def format_kernel_bench(results: dict) -> str:
    lines = [f"kernel comparison over batches of {results['tx_count']} txs "
             f"(backends: {', '.join(results['backends'])})"]
    header = f"{'operation':24} {'py tx/s':>12} {'c tx/s':>12} {'speedup':>8}"
    lines.append(header)
    for op_name, row in results["ops"].items():
        py = row["py"]["tx_per_second"]
        if "c" in row:
            c = row["c"]["tx_per_second"]
            lines.append(f"{op_name:24} {py:12.0f} {c:12.0f} "
                         f"{row['speedup_c_over_py']:7.2f}x")
        else:
            lines.append(f"{op_name:24} {py:12.0f} {'-':>12} {'-':>8}")
    return "\n".join(lines)
