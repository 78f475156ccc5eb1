from dataclasses import replace

import numpy as np
import pytest

from loggas.exceptions import ConfigError
from loggas.models.density import TabulatedDensity
from loggas.models.scenario import InitialKind, InitialSpec
from loggas.services import scenario_service
from loggas.services.potential_service import quartic
from loggas.services.utils import chunked, jackknife, richardson, sample_covariance


def write_density(path, xs, values, header=True):
    lines = ['x,rho'] if header else []
    lines += [f"{x!r},{v!r}" for x, v in zip(xs, values)]
    path.write_text('\n'.join(lines) + '\n')
    return path


def test_load_tabulated(tmp_path):
    xs = np.linspace(-1.0, 1.0, 201)
    path = write_density(tmp_path / 'rho.csv', xs, 0.75 * (1.0 - xs ** 2))
    density = scenario_service.load_tabulated(str(path), 2.0)
    assert isinstance(density, TabulatedDensity)
    assert density.moments(0)[0] == pytest.approx(1.0, abs=1e-10)
    assert density.density(2.0) == 0.0


def test_load_tabulated_rejects_bad_grids(tmp_path):
    with pytest.raises(ConfigError, match="uniform grid"):
        scenario_service.load_tabulated(str(write_density(tmp_path / 'a.csv', [0.0, 0.1, 0.3], [1, 1, 1])), 2.0)
    with pytest.raises(ConfigError, match="negative"):
        scenario_service.load_tabulated(str(write_density(tmp_path / 'b.csv', [0.0, 0.1, 0.2], [1, -1, 1])), 2.0)
    (tmp_path / 'c.csv').write_text("x,rho\n0.0,1.0\n0.1,oops\n")
    with pytest.raises(ConfigError, match="Malformed row"):
        scenario_service.load_tabulated(str(tmp_path / 'c.csv'), 2.0)


def test_reference_density(scaling_scenario):
    reference = scenario_service.reference_density(scaling_scenario, 1.0)
    s = np.sqrt(1.0 + 3.0 * np.exp(-2.0))
    assert reference.edge == pytest.approx(np.sqrt(2.0) * s)

    equilibrium = replace(scaling_scenario, initial=InitialSpec(InitialKind.EQUILIBRIUM))
    assert scenario_service.reference_density(equilibrium, 0.7).edge == pytest.approx(np.sqrt(2.0))

    general = replace(scaling_scenario, potential=replace(quartic(1.0), coeffs=(0.0, 0.1, 0.5, 0.0, 0.25)))
    assert scenario_service.reference_density(general, 0.5) is None


def test_initial_density(scaling_scenario):
    density = scenario_service.initial_density(scaling_scenario)
    assert density.edge == pytest.approx(2.0 * np.sqrt(2.0))


def test_jackknife_of_the_mean():
    samples = np.random.default_rng(1).normal(size=400)
    estimate, error = jackknife(samples, np.mean, n_blocks=400)
    assert estimate == pytest.approx(samples.mean())
    assert error == pytest.approx(samples.std(ddof=1) / np.sqrt(400), rel=1e-8)
    with pytest.raises(ValueError):
        jackknife(samples[:1], np.mean)


def test_small_helpers():
    assert richardson(1.0, 1.5, order=1) == pytest.approx(2.0)
    assert richardson(0.0, 3.0, order=2) == pytest.approx(4.0)
    pairs = np.array([[0.0, 1.0], [1.0, 3.0], [2.0, 5.0]])
    assert sample_covariance(pairs) == pytest.approx(2.0)
    chunks = chunked(list(range(10)), 4)
    assert [len(c) for c in chunks] == [3, 3, 2, 2]
    assert len(chunked([0, 1], 8)) == 2
