"""
Command line entry point: `bohmflow run` and `bohmflow list`.
"""

from pathlib import Path
from typing import Optional, Tuple

import click
from tabulate import tabulate

from bohmflow import __version__
from bohmflow.config.config_manager import config as runtime_config
from bohmflow.core.errors import BohmflowError
from bohmflow.experiments.experiment_config import load_experiment_config
from bohmflow.experiments.registry import ExperimentFactory
from bohmflow.experiments.runner import run_experiment
from bohmflow.utils.log_helper import setup_logging


@click.group()
@click.version_option(__version__, prog_name="bohmflow")
@click.option("--log-level", default=None, help="Override logging.level (DEBUG, INFO, ...)")
def main(log_level: Optional[str]):
    """Bohmian trajectories, nodal structure and chaos diagnostics of the 3-d oscillator."""
    setup_logging(
        level=(log_level or runtime_config.log_level).upper(),
        log_file=runtime_config.log_file,
        console=bool(runtime_config.get("logging.console", True)),
    )


@main.command("run")
@click.argument("experiment")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Experiment YAML file (defaults are used when omitted)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override a config key in dot notation, e.g. integrator.rel_tol=1e-11")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Process-pool size")
def run(experiment: str, config_path: Optional[Path], out_dir: Optional[Path],
        overrides: Tuple[str, ...], workers: Optional[int]):
    """Run EXPERIMENT and write its data files plus manifest.json."""
    try:
        config = load_experiment_config(config_path, overrides, experiment=experiment)
        manifest = run_experiment(config, out_dir, workers)
    except (BohmflowError, OSError) as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"{manifest.experiment}: {len(manifest.files)} files, config {manifest.config_digest[:12]}")


@main.command("list")
def list_experiments():
    """Enumerate the experiments and the plot each one reproduces."""
    rows = [(row["experiment"], row["reproduces"]) for row in ExperimentFactory.describe()]
    click.echo(tabulate(rows, headers=["experiment", "reproduces"], tablefmt="simple"))


if __name__ == "__main__":
    main()
