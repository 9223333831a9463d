"""
rmt command line

    rmt sample|spectrum|semicircle|density|opnorm|oracle|perturb --config FILE [--out DIR] [--seed S] [--threads T]
    rmt serve [--port P]

Exit code 0 when every acceptance check passes, 1 when one fails, 2 on an
invalid config.
"""
import json
import os
import sys
from typing import Any, Dict, Optional

import click
from loguru import logger

from rmt.handlers import actions
from rmt.models import load_document
from rmt.services.experiments import ExperimentResult, emit_histogram, write_outputs
from rmt.utils.errors import ConfigError
from rmt.utils.logger import setup_logging

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_CONFIG = 2


def _dump(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _write_json(payload: Dict[str, Any], out: str, filename: str) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, filename)
    with open(path, "w") as f:
        f.write(_dump(payload))
        f.write("\n")
    return path


def _summary(result: ExperimentResult) -> Dict[str, Any]:
    return {
        "name": result.name,
        "metric": result.metric,
        "rows": len(result.rows),
        "aggregates": {str(n): dict(sorted(a.items())) for n, a in sorted(result.aggregates.items())},
        "checks": [c.to_dict() for c in result.checks],
        "pass": result.passed,
    }


def _execute(command: str, config: str, out: Optional[str], seed: Optional[int], threads: Optional[int]) -> int:
    try:
        params = load_document(config)
        result = actions.ACTIONS[command](params, {"master_seed": seed, "threads": threads})
    except ConfigError as e:
        click.echo(f"Config error: {e}", err=True)
        return EXIT_CONFIG

    if isinstance(result, ExperimentResult):
        if out:
            for path in write_outputs(result, out):
                logger.info(f"Wrote {path}")
        payload = _summary(result)
    else:
        payload = result
        if out:
            _write_json(payload, out, f"{command}.json")
            if command == "spectrum":
                emit_histogram(payload["histogram"], os.path.join(out, "histogram.csv"))

    click.echo(_dump(payload))
    return EXIT_OK if payload.get("pass", True) else EXIT_ACCEPTANCE


def _command(name: str, help_text: str):
    @click.option("--config", "config", required=True, type=click.Path(exists=True, dir_okay=False),
                  help="JSON config document")
    @click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                  help="Directory for CSV/JSON outputs")
    @click.option("--seed", type=int, default=None, help="Master seed (overrides the config)")
    @click.option("--threads", type=int, default=None, help="Worker threads per (N, config) cell")
    def run(config, out, seed, threads):
        if threads is not None and threads < 1:
            click.echo("Config error: --threads must be at least 1", err=True)
            sys.exit(EXIT_CONFIG)
        sys.exit(_execute(name, config, out, seed, threads))

    run.__doc__ = help_text
    return cli.command(name=name)(run)


@click.group()
@click.option("--log-level", default=None, help="Override LOG_LEVEL")
def cli(log_level):
    """Random band matrices with exchangeable entries"""
    setup_logging(log_level)


_command("sample", "Draw one matrix and report its provenance")
_command("spectrum", "Eigenvalues, moments and histogram of one scaled matrix")
_command("semicircle", "KS distance of scaled spectra to the (random) semicircle")
_command("density", "Pooled spectra vs the expected limit sigma_mu")
_command("opnorm", "Operator-norm and second-singular-value scaling")
_command("oracle", "Exact E tr(X^k) vs Monte Carlo, plus the path-counting bounds")
_command("perturb", "Randomized check of the perturbation inequalities")


@cli.command()
@click.option("--port", type=int, default=None, help="Port (defaults to PORT)")
def serve(port):
    """Start the HTTP surface"""
    from rmt.app import create_app

    app = create_app()
    app.run(host="0.0.0.0", port=port or app.config.get("PORT", 5000))


def main():
    cli()


if __name__ == "__main__":
    main()
