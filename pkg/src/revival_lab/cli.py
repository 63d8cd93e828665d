"""Command-line front end: one scenario per reproduced figure plus the fit.

Exit codes: 0 success, 1 numeric failure, 2 usage/configuration error.
The REVIVAL_LAB_THREADS environment variable sets the sweep worker count.
"""

from __future__ import annotations

import configparser
import os
import sys
from importlib import resources

import click

from . import __version__
from .errors import RevivalLabError
from .scenarios import SCENARIO_NAMES, run_scenario
from .sequence import load_config


def _default_config_path():
    return resources.files("revival_lab.data") / "default.cfg"


@click.command(name="revival-lab")
@click.version_option(__version__)
@click.argument("scenario", type=click.Choice(SCENARIO_NAMES))
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Scenario configuration file (defaults to the packaged parameters).")
@click.option("--out", "outdir", type=click.Path(file_okay=False), default="out",
              show_default=True, help="Output directory for CSV/SVG/meta files.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Random seed (synthetic data generation).")
@click.option("--tol", type=float, default=None, help="Integrator tolerance override.")
@click.option("--data", "data_path", type=click.Path(exists=True), default=None,
              help="Measured vacuum-Rabi CSV for the fit scenario (t_i_us, p_g).")
def main(scenario, config_path, outdir, seed, tol, data_path):
    """Simulate one experiment scenario and write its artifacts."""
    try:
        if config_path is None:
            with resources.as_file(_default_config_path()) as p:
                cfg, scen = load_config(p)
        else:
            cfg, scen = load_config(config_path)
    except (FileNotFoundError, configparser.Error, ValueError, RevivalLabError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)

    threads = int(os.environ.get("REVIVAL_LAB_THREADS", "1"))
    try:
        result = run_scenario(
            scenario, cfg, scen, outdir, seed=seed, tol=tol, threads=threads, data_path=data_path
        )
    except RevivalLabError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(1)
    for path in result.files:
        click.echo(str(path))
    for key in sorted(result.summary):
        click.echo(f"  {key} = {result.summary[key]}")


if __name__ == "__main__":
    main()
