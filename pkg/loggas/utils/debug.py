import json
from dataclasses import asdict, is_dataclass
from enum import Enum

import click

from ..models.scenario import Scenario


def _display(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return f"[{', '.join(repr(v) for v in value)}]"
    if isinstance(value, dict):
        return json.dumps(value, indent=2)
    return value


def print_scenario_debug(scenario: Scenario):
    """Print every resolved setting of a scenario, defaults included"""
    click.echo("\n===== DEBUG: Scenario Details =====")

    if scenario.source_path:
        click.echo(f"\nScenario file: {scenario.source_path}")

    click.echo(f"\nSchema: {scenario.schema}")
    click.echo(f"Potential: {scenario.potential} (alpha={scenario.potential.alpha:g}, "
               f"family={scenario.potential.family.value})")
    click.echo(f"beta: {scenario.beta:g}")

    click.echo("\nScenario sections:")
    for section in ('initial', 'sde', 'hydro', 'kernel', 'ou'):
        values = getattr(scenario, section)
        click.echo(f"- {section}")
        if not is_dataclass(values):
            click.echo(f"  Warning: Expected settings for section {section}, got {type(values)}")
            continue
        for key in asdict(values):
            click.echo(f"  - {key}: {_display(getattr(values, key))}")

    click.echo("\nRun settings:")
    click.echo(f"  - horizon: {scenario.horizon:g}")
    click.echo(f"  - times: {_display(scenario.times)}")
    click.echo(f"  - seed: {scenario.seed}")
    click.echo(f"  - output_dir: {scenario.output_dir}")

    if scenario.tolerances:
        click.echo("\nTolerances:")
        for key, value in sorted(scenario.tolerances.items()):
            click.echo(f"  - {key}: {value:g}")
    else:
        click.echo("\nTolerances: [defaults]")

    click.echo("\n===== END DEBUG =====")
