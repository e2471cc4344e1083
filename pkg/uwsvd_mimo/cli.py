"""The ``uwsvd-mimo`` command.

Subcommands:
    exp1          SER against iteration count, CSV per detector and iteration
    exp2          condition numbers of the UW-SVD and plain systems, CSV per trial
    factor-check  UW-SVD versus plain zero forcing on one fresh draw, optional one-row CSV

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

import functools
import logging
import sys
from pathlib import Path

import click

from . import config as env_config
from .experiments.experiment1 import run_experiment1
from .experiments.experiment2 import run_experiment2
from .experiments.factor_check import EQUIVALENCE_TOL, run_factor_check
from .experiments.summary import iterations_to_threshold
from .utils.csv_writer import EXP1_COLUMNS, EXP2_COLUMNS, FACTOR_CHECK_COLUMNS, STDOUT, write_csv
from .utils.errors import ConfigError, DimensionError, NumericalError, ResultWriteError
from .utils.scenario_config import ScenarioConfig, resolve_scenario, write_scenario

logger = logging.getLogger(__name__)


def _configure_logging(verbose: bool):
    level = logging.DEBUG if verbose else getattr(logging, env_config.LOG_LEVEL, logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s', stream=sys.stderr)
    logging.getLogger().setLevel(level)


def scenario_options(command):
    """Options shared by every subcommand."""
    options = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="Scenario file (key=value, schema_version=1)."),
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Master seed."),
        click.option("--trials", type=click.IntRange(min=1), default=None, help="Monte Carlo trials."),
        click.option("--esno-db", type=float, default=None, help="Es/No per receive antenna in dB."),
        click.option("--channel", type=click.Choice(["elaa", "iid"]), default=None, help="Channel model."),
        click.option("--workers", type=click.IntRange(min=1), default=None, help="Threads running trials."),
        click.option("--verbose", "-v", is_flag=True, help="Debug logging."),
    ]
    for option in reversed(options):
        command = option(command)

    @functools.wraps(command)
    def wrapper(config_path, seed, trials, esno_db, channel, workers, verbose, **kwargs):
        _configure_logging(verbose)
        base = ScenarioConfig(trials=env_config.TRIALS, master_seed=env_config.SEED, workers=env_config.WORKERS)
        overrides = {
            "seed": seed,
            "trials": trials,
            "esno_db": esno_db,
            "channel": channel,
            "workers": workers,
            "detectors": kwargs.pop("detectors", None),
        }
        scenario = resolve_scenario(config_path, overrides, base=base)
        return command(scenario=scenario, **kwargs)

    return wrapper


def _resolve_out(out: str) -> str:
    if out == STDOUT:
        return out
    path = Path(out)
    if not path.is_absolute():
        path = Path(env_config.WORKING_DIR) / path
    return str(path)


def _write_results(results, out: str, scenario: ScenarioConfig, columns):
    out = _resolve_out(out)
    write_csv(results, out, columns=columns)
    if out != STDOUT:
        write_scenario(scenario, f"{out}.scenario")


@click.group()
@click.version_option(package_name="uwsvd-mimo")
def cli():
    """UW-SVD preconditioned iterative detection for ELAA uplinks."""


@cli.command("exp1")
@click.option("--out", default=STDOUT, show_default=True, help="Result CSV, '-' for stdout.")
@click.option("--detectors", default=None, help="Comma-separated METHOD:uwsvd|plain:MAX_ITERS entries.")
@scenario_options
def exp1(scenario: ScenarioConfig, out: str):
    """SER versus iteration count."""
    curves = run_experiment1(scenario)
    for curve in curves:
        reached = iterations_to_threshold(curve)
        logger.info(f"{curve.label}: final SER {curve.ser[-1]:.4g}, within 10% of ZF at iteration {reached}")
    _write_results(curves, out, scenario, EXP1_COLUMNS)
    return 0


@cli.command("exp2")
@click.option("--out", default=STDOUT, show_default=True, help="Result CSV, '-' for stdout.")
@scenario_options
def exp2(scenario: ScenarioConfig, out: str):
    """Condition numbers of A and the plain Gram matrix."""
    samples = run_experiment2(scenario)
    _write_results(samples, out, scenario, EXP2_COLUMNS)
    return 0


@cli.command("factor-check")
@click.option("--trial", type=click.IntRange(min=0), default=0, show_default=True,
              help="Trial whose random streams are drawn.")
@click.option("--dump-factors", type=click.Path(), default=None, help="Write the UW-SVD factors to this .npz file.")
@click.option("--out", default=None, help="Also write the measurements as a one-row CSV, '-' for stdout.")
@scenario_options
def factor_check(scenario: ScenarioConfig, trial: int, dump_factors, out):
    """Compare UW-SVD zero forcing against the direct solve."""
    result = run_factor_check(scenario, trial=trial, dump_factors=dump_factors)
    click.echo(f"relative ZF-equivalence error: {result.zf_relative_error:.3e}")
    click.echo(f"max |diag(A) - 1|: {result.unit_diagonal_error:.3e}")
    click.echo(f"relative reconstruction error: {result.reconstruction_error:.3e}")
    click.echo(f"cond(A): {result.cond_a:.6g}  cond(A_bar): {result.cond_a_bar:.6g}")
    if out is not None:
        _write_results([result], out, scenario, FACTOR_CHECK_COLUMNS)
    if not result.passed:
        click.echo(f"FAILED: error exceeds {EQUIVALENCE_TOL:g}", err=True)
        return 2
    return 0


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        rv = cli.main(args=argv, prog_name="uwsvd-mimo", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except (ConfigError, DimensionError, ResultWriteError) as e:
        logger.error(f"{e}")
        click.echo(f"Error: {e}", err=True)
        return 1
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        click.echo(f"Numerical failure: {e}", err=True)
        return 2
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
