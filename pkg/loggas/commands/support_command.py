from pathlib import Path

import click
import numpy as np

from ..models.edge import Side
from ..services import hydro_service, support_service
from ..services.scenario_service import initial_density
from ..utils.output import echo_table, write_json, write_table
from .common import handle_errors, prepare, scenario_options


@click.command(name='track-support')
@scenario_options
@click.option('--samples', type=click.IntRange(min=2),
              help='Evenly spaced times in (0, horizon] instead of the scenario times')
@click.option('--side', type=click.Choice(['both', 'left', 'right']), default='both', show_default=True)
@handle_errors
def track_support(scenario_path, out_dir, seed, fmt, verbose, samples, side):
    """Track the external support edges through the real characteristic flow"""
    scenario = prepare(scenario_path, seed, out_dir, verbose)
    initial = initial_density(scenario)
    settings = scenario.hydro
    moments = hydro_service.solve_moments(scenario.potential, scenario.beta, initial, scenario.horizon,
                                          settings.order, settings.closure, settings.rtol, settings.atol,
                                          settings.method)
    flow = support_service.RealFlow(scenario.potential, scenario.beta, initial, moments)
    if samples:
        times = np.linspace(scenario.horizon / samples, scenario.horizon, samples)
    else:
        times = [t for t in scenario.times if t > 0] or [scenario.horizon]
    sides = (Side.LEFT, Side.RIGHT) if side == 'both' else (Side(side),)
    click.echo(f"Tracking the {side} edge(s) at {len(times)} times...")
    trajectory = support_service.track_support(flow, times, sides)
    report = support_service.jump_report(trajectory)

    out = Path(scenario.output_dir)
    header = ('t', 'a_star', 'a', 'b_star', 'b', 'margin')
    write_table(out, 'support', fmt, header, trajectory.rows())
    write_json(out / 'support_summary.json', {
        'boundary_case': [bool(flag) for flag in trajectory.boundary_flags],
        'upward_jumps': report.upward,
        'downward_jumps': report.downward,
        'largest_upward': report.largest_upward,
        'mass_residual': moments.mass_residual,
    })
    echo_table(header, trajectory.rows())
    if any(trajectory.boundary_flags):
        click.echo("\nNote: some times fell back to the boundary case (no sign change of Z'_t)")
    if not report.ok:
        click.echo(f"\nWarning: {len(report.upward)} upward jump(s) of b_t beyond the speed bound", err=True)
