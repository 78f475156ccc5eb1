import functools
from pathlib import Path

import click
import numpy as np

from ..models.hydro import HydroField
from ..models.kernel import KernelMethod
from ..models.potential import PotentialFamily
from ..models.scenario import InitialKind
from ..services import gmap_service, hydro_service, kernel_pde_service, kernel_service
from ..services.potential_service import equilibrium_density
from ..services.scenario_service import initial_density, reference_density
from ..utils.output import echo_table, write_table
from .common import handle_errors, prepare, scenario_options, workers_option


def _closed_form(scenario, dt, x1, x2, t2):
    density = equilibrium_density(scenario.potential, scenario.beta)
    if dt == 0:
        return kernel_service.johansson_equal_time(x1, x2, density.edge, scenario.beta)
    if scenario.potential.family is not PotentialFamily.HARMONIC:
        raise ValueError("Two-time closed forms exist for the harmonic potential only; use --method gmap")
    return kernel_service.kernel_set(dt, x1, x2, density.edge, scenario.beta, t2)


def build_source(scenario, method: KernelMethod, workers=None):
    """G-map or transport source shared by every point of a sweep"""
    if method is KernelMethod.G_MAP:
        return gmap_service.g_map_build(equilibrium_density(scenario.potential, scenario.beta), scenario.beta)
    if method is KernelMethod.PDE_CHARACTERISTICS:
        if scenario.initial.kind is InitialKind.EQUILIBRIUM:
            return equilibrium_density(scenario.potential, scenario.beta)
        return hydro_service.solve_hydro(scenario.potential, scenario.beta, initial_density(scenario),
                                         scenario.horizon, scenario.hydro, workers=workers)
    return None


def evaluate(scenario, method: KernelMethod, x1: float, x2: float, t1: float, t2: float, source=None):
    """All four sign slots of the kernel at (t1, x1; t2, x2) by the chosen method"""
    dt = t1 - t2
    if method is KernelMethod.CLOSED_FORM:
        return _closed_form(scenario, dt, x1, x2, t2)
    source = source if source is not None else build_source(scenario, method)
    if method is KernelMethod.G_MAP:
        return gmap_service.stationary_slots(source, t1, t2, x1, x2)
    slices = None
    if isinstance(source, HydroField) and t2 > 0:
        reference = reference_density(scenario, t2)
        if reference is None:
            raise ValueError(f"No equal-time kernel is known at t2={t2:g} for this scenario; use t2 = 0")
        slices = functools.partial(kernel_pde_service.equal_time_slice, reference, scenario.beta, x2)
    return kernel_pde_service.pde_kernel_slots(source, x1, x2, dt, t2, eps=scenario.kernel.eps, slices=slices)


@click.command(name='eval-kernel')
@scenario_options
@workers_option
@click.option('--method', type=click.Choice([m.value for m in KernelMethod]), default='closed',
              show_default=True, help='Closed form, G-map continuation or PDE characteristics')
@click.option('--x1', type=float, help='First position (default from the scenario)')
@click.option('--x2', type=float, help='Second position (default from the scenario)')
@click.option('--t1', type=float, help='Later time (default from the scenario)')
@click.option('--t2', type=float, help='Earlier time (default from the scenario)')
@click.option('--sweep', is_flag=True, help='Sweep x1 across the support on kernel.n_points points')
@handle_errors
def eval_kernel(scenario_path, out_dir, seed, fmt, verbose, workers, method, x1, x2, t1, t2, sweep):
    """Evaluate the fluctuation covariance kernel"""
    scenario = prepare(scenario_path, seed, out_dir, verbose)
    settings = scenario.kernel
    x1 = settings.x1 if x1 is None else x1
    x2 = settings.x2 if x2 is None else x2
    t1 = settings.t1 if t1 is None else t1
    t2 = settings.t2 if t2 is None else t2
    if t1 < t2:
        raise ValueError("t1 must not precede t2")
    method = KernelMethod(method)
    source = build_source(scenario, method, workers)

    if sweep:
        if isinstance(source, HydroField):
            edge = initial_density(scenario).edge
        else:
            edge = equilibrium_density(scenario.potential, scenario.beta).edge
        positions = [x for x in np.linspace(-0.9, 0.9, settings.n_points) * edge
                     if not (t1 == t2 and np.isclose(x, x2))]
    else:
        positions = [x1]

    values = []
    for x in positions:
        values.extend(evaluate(scenario, method, float(x), x2, t1, t2, source))

    out = Path(scenario.output_dir)
    write_table(out, 'kernels', fmt, ('t1', 'x1', 't2', 'x2', 'eps1', 'eps2', 're', 'im', 'method'),
                [v.row() for v in values])
    real_rows = [kernel_service.real_kernel_row(values[i:i + 4]) for i in range(0, len(values), 4)]
    write_table(out, 'real_kernel', fmt, ('t1', 'x1', 't2', 'x2', 'g'), real_rows)
    echo_table(('t1', 'x1', 't2', 'x2', 'g'), real_rows)
