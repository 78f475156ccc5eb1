import copy
import json

import pytest

from loggas.models.scenario import HydroSettings
from loggas.services.hydro_service import solve_hydro
from loggas.services.potential_service import equilibrium_density, harmonic, scaled_semicircle
from loggas.utils.config_loader import DEFAULT_SCENARIO, parse_scenario


@pytest.fixture
def raw_scenario():
    """A deep copy of the template scenario, safe to mutate"""
    return copy.deepcopy(DEFAULT_SCENARIO)


@pytest.fixture
def small_raw_scenario(raw_scenario, tmp_path):
    raw_scenario.update({
        'times': [0.05, 0.1],
        'output_dir': str(tmp_path / 'out'),
        'sde': {'n_particles': 4, 'dt': 0.01, 'replicas': 3, 'start': 'quantile'},
        'ou': {'max_mode': 4, 'dt': 0.01, 't_end': 0.5, 'replicas': 10, 'lag': 0.1},
    })
    return raw_scenario


@pytest.fixture
def write_scenario(tmp_path):
    def write(raw, name='scenario.json'):
        path = tmp_path / name
        path.write_text(json.dumps(raw))
        return path
    return write


@pytest.fixture
def scaling_scenario(raw_scenario):
    return parse_scenario(raw_scenario)


@pytest.fixture(scope='session')
def semicircle():
    return equilibrium_density(harmonic(), 2.0)


@pytest.fixture(scope='session')
def scaling_field():
    """Hydro fan for the contracting scaling solution, s0 = 2, on [0, 0.5]"""
    settings = HydroSettings(n_real=24, n_imag=16, imag_max=5.0)
    return solve_hydro(harmonic(), 2.0, scaled_semicircle(2.0, 2.0), 0.5, settings, [0.25])

