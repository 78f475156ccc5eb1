import logging
from pathlib import Path

import click
import numpy as np

from ..exceptions import NumericalError
from ..services import hydro_service
from ..services.scenario_service import initial_density, reference_density
from ..utils.output import echo_table, write_json, write_table
from .common import handle_errors, prepare, scenario_options, workers_option

logger = logging.getLogger(__name__)


def _profile_grid(field, t: float, points: int) -> np.ndarray:
    """Grid over the support estimated from the first two moments, semicircle-shaped"""
    moments = field.moments.at(t)
    sigma = np.sqrt(max(moments[2] - moments[1] ** 2, 0.0))
    return moments[1] + np.linspace(-1.95, 1.95, points) * sigma


def _density_profile(field, t: float, xs: np.ndarray) -> np.ndarray:
    try:
        return hydro_service.density(field, t, xs)
    except NumericalError:
        logger.warning(f"Density reconstruction failed on part of the grid at t={t:g}; writing NaN there")
    values = np.full(len(xs), np.nan)
    for i, x in enumerate(xs):
        try:
            values[i] = hydro_service.density(field, t, np.array([x]))[0]
        except NumericalError:
            continue
    return values


@click.command(name='solve-hydro')
@scenario_options
@workers_option
@click.option('--points', type=click.IntRange(min=3), default=101, show_default=True,
              help='Density profile points per sample time')
@handle_errors
def solve_hydro(scenario_path, out_dir, seed, fmt, verbose, workers, points):
    """Solve the hydrodynamic limit by moments and characteristics"""
    scenario = prepare(scenario_path, seed, out_dir, verbose)
    initial = initial_density(scenario)
    click.echo(f"Solving {scenario.potential} at beta={scenario.beta:g} to t={scenario.horizon:g} "
               f"(closure={scenario.hydro.closure.value}, K={scenario.hydro.order})...")
    field = hydro_service.solve_hydro(scenario.potential, scenario.beta, initial, scenario.horizon,
                                      scenario.hydro, scenario.times, workers=workers)
    out = Path(scenario.output_dir)

    snapshot_rows, density_rows, moment_rows, summary_rows = [], [], [], []
    for t in field.times:
        snap = hydro_service.snapshot(field, t)
        u = snap.u
        for i in np.flatnonzero(snap.alive):
            snapshot_rows.append((t, snap.z[i].real, snap.z[i].imag, u[i].real, u[i].imag))
        xs = _profile_grid(field, t, points)
        rho = _density_profile(field, t, xs)
        density_rows.extend(zip(np.full(len(xs), t), xs, rho))
        moments = field.moments.at(t)
        moment_rows.extend((t, k, value) for k, value in enumerate(moments.m))
        reference = reference_density(scenario, t)
        error = float(np.nanmax(np.abs(rho - reference.density(xs)))) if reference is not None else None
        summary_rows.append((t, moments[0], moments[2], field.kill_counts[float(t)],
                             hydro_service.herglotz_violations(field, t), error))

    write_table(out, 'field', fmt, ('t', 're_z', 'im_z', 're_U', 'im_U'), snapshot_rows)
    write_table(out, 'density', fmt, ('t', 'x', 'rho'), density_rows)
    write_table(out, 'moments', fmt, ('t', 'k', 'm_k'), moment_rows)
    header = ('t', 'm0', 'm2', 'killed', 'herglotz_violations', 'max_density_error')
    write_json(out / 'hydro_summary.json', {
        'mass_residual': field.moments.mass_residual,
        'closure': scenario.hydro.closure.value,
        'rows': [dict(zip(header, row)) for row in summary_rows],
    })
    click.echo(f"Mass residual: {field.moments.mass_residual:.3g}")
    echo_table(header, summary_rows)
