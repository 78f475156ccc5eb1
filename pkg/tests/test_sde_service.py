import numpy as np
import pytest

from loggas.exceptions import ConfigError, NumericalError
from loggas.models.particles import ParticleState, RunningMoments, SeedRecord
from loggas.models.scenario import InitialKind, InitialSpec, StartMode
from loggas.services import sde_service
from loggas.services.potential_service import harmonic, quartic
from loggas.utils.config_loader import parse_scenario


@pytest.fixture
def equilibrium_scenario(raw_scenario):
    raw_scenario.update({
        'initial': {'kind': 'equilibrium'},
        'sde': {'n_particles': 20, 'dt': 0.01, 'replicas': 400, 'start': 'equilibrium'},
    })
    return parse_scenario(raw_scenario)


def test_two_particle_gap_relaxes_to_fixed_point():
    simulator = sde_service.LogGasSimulator(harmonic(), 2.0, dt=1e-3, noise=False)
    x, rejections = simulator.evolve(np.array([[-0.1, 0.1]]), [0], 0, 10_000)
    # Gap dynamics ġ = β/(2g) − g
    assert x[0, 1] - x[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert x[0, 0] == pytest.approx(-x[0, 1], abs=1e-12)
    assert rejections.tolist() == [0]


def test_crossing_step_is_halved():
    simulator = sde_service.LogGasSimulator(harmonic(), 2.0, dt=3.0, noise=False)
    x, rejections = simulator.advance(np.array([[-1.0, 1.0]]), [0], 0)
    assert rejections[0] >= 1
    assert x[0, 0] < x[0, 1]


def test_unresolved_collision_raises_with_diagnostics():
    simulator = sde_service.LogGasSimulator(harmonic(), 2.0, dt=3.0, dt_min=2.0, noise=False)
    with pytest.raises(NumericalError, match="collision unresolved") as info:
        simulator.advance(np.array([[-1.0, 1.0]]), [7], 0)
    assert info.value.diagnostics['replica'] == 7
    assert info.value.exit_code == 3


def test_radius_guard():
    simulator = sde_service.LogGasSimulator(harmonic(), 2.0, dt=1e-3, radius=0.5, noise=False)
    with pytest.raises(NumericalError, match="radius exceeded"):
        simulator.advance(np.array([[-1.0, 1.0]]), [0], 0)


def test_streams_are_reproducible_and_replica_keyed():
    first = sde_service.LogGasSimulator(harmonic(), 2.0, dt=1e-2, entropy=11)
    second = sde_service.LogGasSimulator(harmonic(), 2.0, dt=1e-2, entropy=11)
    start = np.tile(np.linspace(-1.0, 1.0, 5), (3, 1))
    a, _ = first.evolve(start, [0, 1, 2], 0, 20)
    b, _ = second.evolve(start[1:], [1, 2], 0, 20)
    np.testing.assert_array_equal(a[1:], b)
    assert not np.allclose(a[0], a[1])


def test_single_step_advances_the_seed_record():
    state = ParticleState(np.array([-0.5, 0.0, 0.5]), 0.0, SeedRecord(3, replica=1))
    after = sde_service.step(state, 1e-3, harmonic(), 2.0)
    assert after.seed.step == 1
    assert after.t == pytest.approx(1e-3)
    assert after.is_ordered()
    with pytest.raises(ValueError, match="ordered"):
        sde_service.step(ParticleState(np.array([0.5, 0.0]), 0.0, SeedRecord(3)), 1e-3, harmonic(), 2.0)


def test_equilibrium_sample_matches_harmonic_identity():
    rng = np.random.default_rng(5)
    n, beta = 10, 2.0
    sums = np.array([np.sum(sde_service.equilibrium_sample(beta, n, rng) ** 2) for _ in range(4000)])
    expected = sde_service.harmonic_identities(beta, n)['mean_sum_sq']
    assert expected == pytest.approx(5.0)
    assert abs(sums.mean() - expected) < 5 * sums.std() / np.sqrt(len(sums))


def test_quantile_positions_are_symmetric(semicircle):
    positions = sde_service.quantile_positions(semicircle, 9)
    assert np.all(np.diff(positions) > 0)
    np.testing.assert_allclose(positions, -positions[::-1], atol=1e-9)
    assert positions[4] == pytest.approx(0.0, abs=1e-9)


def test_equilibrium_start_needs_harmonic_potential(raw_scenario):
    raw_scenario['potential'] = {'coeffs': [0.0, 0.0, 0.0, 0.0, 0.25], 'alpha': 0.0}
    raw_scenario['initial'] = {'kind': 'equilibrium'}
    raw_scenario['sde'] = {'start': 'equilibrium'}
    scenario = parse_scenario(raw_scenario)
    with pytest.raises(ConfigError, match="harmonic"):
        sde_service.initial_positions(scenario, 0)


def test_empirical_stieltjes_and_pairing(semicircle):
    assert sde_service.empirical_stieltjes(np.array([0.0]), 1j) == pytest.approx(1j)
    with pytest.raises(ValueError):
        sde_service.empirical_stieltjes(np.array([0.0]), 0.5)
    state = np.array([-0.5, 0.5])
    assert sde_service.pair_fluctuation(state, sde_service.linear, semicircle) == pytest.approx(0.0, abs=1e-12)
    assert sde_service.pair_fluctuation(state, sde_service.quadratic, semicircle) == pytest.approx(0.5 - 1.0)


def test_generator_drift():
    x = np.array([-1.0, 0.5, 2.0])
    assert sde_service.generator_drift(harmonic(), 2.0, x, np.ones_like) == pytest.approx(-1.5)
    rate = sde_service.generator_drift(harmonic(), 2.0, x, lambda y: 2 * y, lambda y: 2 * np.ones_like(y))
    # −2Σx² + β(N−1)/2 + 1
    assert rate == pytest.approx(-7.5)
    assert sde_service.generator_drift(quartic(0.0), 2.0, x, np.ones_like) == pytest.approx(-(-1.0 + 0.125 + 8.0))


def test_running_moments_merge():
    left, right, whole = RunningMoments(), RunningMoments(), RunningMoments()
    values = [0.3, 1.2, -0.4, 2.5, 0.9]
    for v in values[:2]:
        left.add(v)
    for v in values[2:]:
        right.add(v)
    for v in values:
        whole.add(v)
    merged = left.merge(right)
    assert merged.count == 5
    assert merged.mean == pytest.approx(whole.mean)
    assert merged.variance == pytest.approx(np.var(values, ddof=1))


def test_mc_covariance_at_equilibrium(equilibrium_scenario):
    estimate = sde_service.mc_covariance(equilibrium_scenario, sde_service.linear, sde_service.linear,
                                         0.0, 0.0, workers=1)
    assert estimate.replicas == 400
    assert abs(estimate.estimate - 0.5) < 4 * estimate.standard_error + 1e-3


def test_mc_covariance_needs_two_replicas(equilibrium_scenario):
    with pytest.raises(ValueError, match="two replicas"):
        sde_service.mc_covariance(equilibrium_scenario, sde_service.linear, sde_service.linear,
                                  0.0, 0.0, replicas=1, workers=1)


def test_trajectories_do_not_depend_on_worker_count(small_raw_scenario):
    scenario = parse_scenario(small_raw_scenario)
    serial = sde_service.simulate_trajectories(scenario, workers=1)
    parallel = sde_service.simulate_trajectories(scenario, workers=2)
    assert serial.rows == parallel.rows
    assert len(serial.rows) == 3 * 2 * 4
    assert serial.moments['sum'].count == 3


def test_with_sde_replaces_settings(equilibrium_scenario):
    changed = sde_service.with_sde(equilibrium_scenario, start=StartMode.QUANTILE, burn_in=0.5)
    assert changed.sde.start is StartMode.QUANTILE
    assert changed.sde.burn_in == 0.5
    assert changed.initial == InitialSpec(InitialKind.EQUILIBRIUM)
