"""chaintrace command line: scenario runner, benchmark, verifier, server.

Exit codes: 0 pass, 1 mismatch/failure, 2 usage or script error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from chaintrace.errors import ChainTraceError


@click.group()
def cli():
    """Multi-chain supply-chain traceability platform."""


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False,
                                          path_type=Path))
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Persist chain logs here (default: memory).")
@click.option("--seed", type=int, default=0,
              help="Recorded in the report; scripts themselves are "
                   "deterministic.")
@click.option("--report", "report_path",
              type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the JSON report here.")
def run(script: Path, data_dir: Path, seed: int, report_path: Path):
    """Run a scenario SCRIPT and check its expectations and assertions."""
    from chaintrace.cli.scenario import (ScenarioParseError, ScenarioRunner,
                                         parse_file)
    try:
        scenario = parse_file(script)
    except ScenarioParseError as exc:
        click.echo(f"parse error: {exc.message}", err=True)
        sys.exit(2)
    runner = ScenarioRunner(scenario, data_dir=data_dir)
    report = runner.run()
    for result in report.steps:
        mark = "ok " if result.passed else "FAIL"
        click.echo(f"[{mark}] line {result.step.line_no}: {result.step.actor} "
                   f"{result.step.action} -> {result.outcome} {result.detail}")
    for result in report.asserts:
        mark = "ok " if result.passed else "FAIL"
        click.echo(f"[{mark}] line {result.check.line_no}: assert "
                   f"{result.check.kind} {result.detail}")
    click.echo(f"audit entries: {report.audit_count}")
    for label, digest in report.state_digests.items():
        click.echo(f"state {label}: {digest}")
    payload = report.to_dict()
    payload["seed"] = seed
    if report_path is not None:
        report_path.write_text(json.dumps(payload, indent=2))
    click.echo("PASS" if report.passed else "MISMATCH")
    sys.exit(0 if report.passed else 1)


@cli.command()
@click.option("--chains", type=int, default=6, show_default=True,
              help="Number of active chains (1 = single-chain baseline).")
@click.option("--workload", type=click.Path(exists=True, dir_okay=False,
                                            path_type=Path), default=None,
              help="Workload mix JSON (default: built-in mix).")
@click.option("--duration", type=float, default=10.0, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Write the JSON report here.")
@click.option("--codec", type=click.Choice(["auto", "c", "py"]),
              default="auto", show_default=True,
              help="Force a digest kernel backend.")
def bench(chains: int, workload: Path, duration: float, seed: int,
          out: Path, codec: str):
    """Measure committed-tx throughput and latency for N active chains."""
    from chaintrace.cli.bench import format_report, run_bench
    from chaintrace.cli.workload import WorkloadMix
    try:
        mix = WorkloadMix.load(workload)
        report = run_bench(chains, mix, duration, seed, codec)
    except ChainTraceError as exc:
        if exc.code == "InvalidWorkload":
            click.echo(f"invalid workload: {exc.message}", err=True)
            sys.exit(2)
        raise
    click.echo(format_report(report))
    if out is not None:
        out.write_text(json.dumps(report, indent=2))


@cli.command()
@click.option("--data-dir", type=click.Path(exists=True, file_okay=False,
                                            path_type=Path), required=True)
def verify(data_dir: Path):
    """Recompute every chain's hashes and state digests from its log."""
    from chaintrace.cli.verify import verify_data_dir
    reports = verify_data_dir(data_dir)
    all_ok = True
    for label, ok, detail in reports:
        mark = "ok " if ok else "BAD"
        click.echo(f"[{mark}] {label}: {detail}")
        all_ok &= ok
    sys.exit(0 if all_ok else 1)


@cli.command()
@click.option("--port", type=int, default=8440, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False,
                                          path_type=Path), default=None,
              help="Genesis config JSON (default: bundled salmon config).")
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Persist state here (default: memory).")
@click.option("--console-dir", type=click.Path(file_okay=False,
                                               path_type=Path), default=None,
              help="Serve the operator console from this directory.")
def serve(port: int, host: str, config: Path, data_dir: Path,
          console_dir: Path):
    """Start the HTTP gateway over a live system."""
    import uvicorn

    from chaintrace.domains.system import TraceSystem
    from chaintrace.gateway import SessionStore, create_app
    from chaintrace.ledger.genesis import GenesisConfig, salmon_genesis

    genesis = (GenesisConfig.load(config) if config is not None
               else salmon_genesis())
    system = TraceSystem(genesis, data_dir=data_dir, drive="auto")
    app = create_app(system, SessionStore(), console_dir=console_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        system.close()


@cli.command("kernel-bench")
@click.option("--txs", type=int, default=500, show_default=True,
              help="Transactions per sealed block.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              default=None)
def kernel_bench(txs: int, out: Path):
    """Compare the compiled digest kernel against the pure-Python fallback."""
    from chaintrace.cli.kbench import format_kernel_bench, run_kernel_bench
    results = run_kernel_bench(txs)
    click.echo(format_kernel_bench(results))
    if out is not None:
        out.write_text(json.dumps(results, indent=2))


if __name__ == "__main__":
    cli()
