from pathlib import Path

import click

from ..services import sde_service
from ..utils.output import echo_table, write_json, write_table
from .common import handle_errors, prepare, scenario_options, workers_option


@click.command(name='simulate-sde')
@scenario_options
@workers_option
@click.option('--replicas', type=click.IntRange(min=1), help='Override the number of replicas')
@click.option('--noise/--no-noise', default=True, help='Drop the Brownian term for deterministic runs')
@click.option('--f', 'f_name', type=click.Choice(sorted(sde_service.TEST_FUNCTIONS)), default='x',
              help='First test function of the covariance estimate')
@click.option('--g', 'g_name', type=click.Choice(sorted(sde_service.TEST_FUNCTIONS)), default='x2',
              help='Second test function of the covariance estimate')
@click.option('--t1', type=float, help='Estimate Cov(<Y_t1, f>, <Y_t2, g>) at this time')
@click.option('--t2', type=float, default=0.0, show_default=True, help='Second time of the covariance')
@handle_errors
def simulate_sde(scenario_path, out_dir, seed, fmt, verbose, workers, replicas, noise,
                 f_name, g_name, t1, t2):
    """Simulate the N-particle log-gas and dump trajectories"""
    scenario = prepare(scenario_path, seed, out_dir, verbose)
    sde = scenario.sde
    click.echo(f"Simulating {replicas or sde.replicas} replicas of N={sde.n_particles} "
               f"(beta={scenario.beta:g}, dt={sde.dt:g}, seed={scenario.seed})...")
    result = sde_service.simulate_trajectories(scenario, replicas=replicas, workers=workers, noise=noise)
    out = Path(scenario.output_dir)
    path = write_table(out, 'trajectories', fmt, ('replica', 't', 'i', 'lambda'), result.rows)
    click.echo(f"Wrote {len(result.rows)} rows to {path}")

    summary = {'replicas': result.replicas, 'times': list(result.times), 'halvings': result.rejections,
               'n_particles': sde.n_particles, 'beta': scenario.beta, 'seed': scenario.seed}
    rows = []
    for name, moments in result.moments.items():
        summary[name] = {'count': moments.count, 'mean': moments.mean, 'variance': moments.variance,
                         'standard_error': moments.standard_error}
        rows.append((name, moments.mean, moments.standard_error, moments.variance))

    if t1 is not None:
        f, g = sde_service.TEST_FUNCTIONS[f_name], sde_service.TEST_FUNCTIONS[g_name]
        estimate = sde_service.mc_covariance(scenario, f, g, t1, t2, replicas=replicas, workers=workers)
        summary['covariance'] = {'f': f_name, 'g': g_name, 't1': t1, 't2': t2,
                                 'estimate': estimate.estimate, 'standard_error': estimate.standard_error,
                                 'replicas': estimate.replicas, 'halvings': estimate.rejections}
        rows.append((f'cov({f_name},{g_name})', estimate.estimate, estimate.standard_error, None))

    write_json(out / 'summary.json', summary)
    click.echo(f"\nSummary at t={result.times[-1]:g} ({result.rejections} step halvings):")
    echo_table(('statistic', 'mean', 'std. error', 'variance'), rows)
