from pathlib import Path

import click

from ..exceptions import ConfigError
from ..models.scenario import InitialKind
from ..utils.config_loader import create_default_scenario, load_scenario
from ..utils.debug import print_scenario_debug
from .common import configure_logging


@click.group(name='config')
def config_group():
    """Commands for managing loggas scenario files"""
    pass


@config_group.command(name='create')
@click.option('--path', help='Path where the scenario file should be created')
@click.option('--force', is_flag=True, help='Overwrite an existing file without asking')
def create_config(path, force):
    """Create a template scenario (Hermite scaling solution)"""
    if path and not path.lower().endswith(('.json', '.yml', '.yaml')):
        path = path + '.json'
        click.echo(f"Using JSON format: {path}")

    result = create_default_scenario(Path(path) if path else None, overwrite=force)
    if result:
        click.echo(f"Scenario template created successfully at {result}")


@config_group.command(name='validate')
@click.option('--scenario', 'scenario_path', type=click.Path(dir_okay=False), help='Scenario file to check')
@click.option('--verbose', '-v', is_flag=True, help='Show every resolved setting')
def validate_config(scenario_path, verbose):
    """Validate a scenario file"""
    configure_logging(verbose)
    try:
        scenario = load_scenario(scenario_path)
    except ConfigError as e:
        click.echo(f"Configuration error: {e}", err=True)
        click.echo("\nRun 'loggas config create' to generate a template scenario.", err=True)
        raise SystemExit(e.exit_code)

    if verbose:
        print_scenario_debug(scenario)
    click.echo("Scenario is valid.")

    click.echo("\nScenario summary:")
    click.echo(f" - Name: {scenario.name}")
    click.echo(f" - Potential: {scenario.potential} ({scenario.potential.family.value})")
    click.echo(f" - beta: {scenario.beta:g}")
    initial = scenario.initial
    if initial.kind is InitialKind.SCALED_SEMICIRCLE:
        click.echo(f" - Initial density: scaled semicircle, s0={initial.s0:g}")
    elif initial.kind is InitialKind.TABULATED:
        click.echo(f" - Initial density: tabulated from {initial.path}")
    else:
        click.echo(" - Initial density: equilibrium")
    click.echo(f" - Particles: N={scenario.sde.n_particles}, {scenario.sde.replicas} replicas, "
               f"dt={scenario.sde.dt:g}")
    click.echo(f" - Horizon: {scenario.horizon:g} ({len(scenario.times)} sample times)")

    if scenario.source_path:
        click.echo(f"\nLoaded scenario from: {scenario.source_path}")
