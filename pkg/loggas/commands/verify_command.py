from pathlib import Path

import click

from ..exceptions import AcceptanceFailure, NumericalError
from ..services import verify_service
from ..utils.output import echo_table, write_json
from .common import handle_errors, prepare, scenario_options, workers_option


@click.command(name='verify')
@scenario_options
@workers_option
@click.option('--only', multiple=True, type=click.Choice(sorted(verify_service.CHECKS)),
              help='Run only the named check group (repeatable)')
@handle_errors
def verify(scenario_path, out_dir, seed, fmt, verbose, workers, only):
    """Run the acceptance suite and write a pass/fail JSON report"""
    scenario = prepare(scenario_path, seed, out_dir, verbose)
    click.echo(f"Running {len(only) or len(verify_service.CHECKS)} check group(s) on '{scenario.name}'...")
    report = verify_service.run_checks(scenario, only=only, workers=workers)
    path = write_json(Path(scenario.output_dir) / 'verify.json', report.as_dict())

    rows = [(c.name, c.status.value, c.observed, c.tolerance) for c in report.checks]
    echo_table(('check', 'status', 'observed', 'tolerance'), rows, limit=None)
    click.echo(f"\nReport written to {path}")

    errored = [c for c in report.failures if 'error' in c.details]
    if errored:
        first = errored[0]
        raise NumericalError(f"{first.name}: {first.details['error']}",
                             {k: v for k, v in first.details.items() if k != 'error'})
    if not report.passed:
        names = ', '.join(c.name for c in report.failures)
        raise AcceptanceFailure(f"{len(report.failures)} check(s) failed: {names}")
    click.echo("All checks passed.")
