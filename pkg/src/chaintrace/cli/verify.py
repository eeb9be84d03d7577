"""Offline integrity verification of a data directory's chain logs."""

from __future__ import annotations

from pathlib import Path

from chaintrace.contracts import make_contract
from chaintrace.ledger.blocklog import LogCorruption, read_records
from chaintrace.ledger.chain import replay_records
from chaintrace.ledger.genesis import GenesisConfig, chain_log_name
from chaintrace.ledger.types import ChainId


def verify_data_dir(data_dir: Path) -> list[tuple[str, bool, str]]:
    """One (chain label, ok, detail) row per chain; missing logs are
    failures."""
    data_dir = Path(data_dir)
    genesis_path = data_dir / "genesis.json"
    config = (GenesisConfig.load(genesis_path) if genesis_path.exists()
              else GenesisConfig())
    rows: list[tuple[str, bool, str]] = []
    for chain_id in ChainId:
        path = data_dir / "chains" / chain_log_name(chain_id)
        if not path.exists():
            rows.append((chain_id.label, False, f"log file absent: {path}"))
            continue
        try:
            records = read_records(path)
        except LogCorruption as exc:
            rows.append((chain_id.label, False,
                         f"framing damaged at record {exc.index}: "
                         f"{exc.reason}"))
            continue
        contracts = {name: make_contract(name)
                     for name in config.deployments.get(chain_id, ())}
        result = replay_records(chain_id, records, contracts)
        if result.ok:
            rows.append((chain_id.label, True,
                         f"{len(records) - 1} blocks beyond genesis, "
                         f"{result.blocks_tx_count} txs"))
        else:
            rows.append((chain_id.label, False,
                         f"first bad height {result.first_bad_height}: "
                         f"{result.detail}"))
    return rows
