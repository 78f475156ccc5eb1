import functools
import logging
import os
from dataclasses import replace
from pathlib import Path

import click

from ..exceptions import AcceptanceFailure, ConfigError, NumericalError
from ..models.scenario import Scenario
from ..utils.config_loader import load_scenario

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def configure_logging(verbose: bool = False) -> None:
    """--verbose wins; otherwise LOGGAS_LOG picks the level, WARNING by default"""
    if verbose:
        level = logging.DEBUG
    else:
        name = os.environ.get('LOGGAS_LOG', 'WARNING').upper()
        level = getattr(logging, name) if name in LOG_LEVELS else logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s: %(message)s', force=True)


def scenario_options(func):
    """Options shared by every scenario-driven command"""
    options = [
        click.option('--scenario', 'scenario_path', type=click.Path(dir_okay=False),
                     help='Scenario file (JSON or YAML); searched for when omitted'),
        click.option('--out', 'out_dir', type=click.Path(file_okay=False),
                     help='Output directory (overrides output_dir in the scenario)'),
        click.option('--seed', type=click.IntRange(min=0), help='Override the scenario seed'),
        click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default='csv',
                     help='Format of the tabular artifacts'),
        click.option('--verbose', '-v', is_flag=True, help='Log at DEBUG level'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


workers_option = click.option('--workers', type=click.IntRange(min=1),
                              help='Worker processes (default: logical cores for replicas, one for the fan)')


def prepare(scenario_path, seed, out_dir, verbose) -> Scenario:
    configure_logging(verbose)
    scenario = load_scenario(scenario_path)
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    if out_dir is not None:
        scenario = replace(scenario, output_dir=out_dir)
    Path(scenario.output_dir).mkdir(parents=True, exist_ok=True)
    return scenario


def handle_errors(func):
    """Map loggas errors to exit codes: config 2, numerical 3, acceptance 1"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except AcceptanceFailure as e:
            click.echo(f"Acceptance failure: {e}", err=True)
            raise SystemExit(e.exit_code)
        except NumericalError as e:
            click.echo(f"Numerical error: {e}", err=True)
            for key, value in e.diagnostics.items():
                click.echo(f"  {key}: {value}", err=True)
            raise SystemExit(e.exit_code)
        except (ConfigError, ValueError) as e:
            click.echo(f"Configuration error: {e}", err=True)
            if isinstance(e, ConfigError) and 'No scenario file' in str(e):
                click.echo("\nRun 'loggas config create' to generate a template scenario.", err=True)
            raise SystemExit(ConfigError.exit_code)
    return wrapper
