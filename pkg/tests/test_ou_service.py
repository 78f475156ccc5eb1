import numpy as np
import pytest

from loggas.exceptions import NumericalError
from loggas.models.ou import OUSpectral
from loggas.services import kernel_service, ou_service


def test_hermite_identification():
    spectral = ou_service.hermite_spectral(16)
    n = np.arange(1, 17)
    np.testing.assert_allclose(spectral.drift, n, atol=1e-6)
    np.testing.assert_allclose(spectral.stationary_cov, n / (2 * np.pi ** 2), atol=1e-12)
    np.testing.assert_allclose(spectral.noise_sq, spectral.drift * spectral.stationary_cov)
    assert np.max(spectral.lyapunov_defect()) < 1e-14
    assert len(spectral.rows()) == 16


def test_identification_failures():
    with pytest.raises(ValueError, match="n=0"):
        ou_service.identify(ou_service.hermite_mode_kernel, [0, 1, 2])
    with pytest.raises(NumericalError, match="non-decaying"):
        ou_service.identify(lambda dt, n: np.exp(dt) * np.ones(len(n)), [1, 2])
    with pytest.raises(NumericalError, match="not positive") as info:
        ou_service.identify(lambda dt, n: np.where(n == 2, 0.0, 1.0), [1, 2, 3])
    assert info.value.diagnostics['mode'] == 2


def test_angle_kernel_modes_match_the_closed_form():
    modes = ou_service.angle_mode_kernel(kernel_service.hermite_angle_kernel, 0.5, 16)
    np.testing.assert_allclose(modes, ou_service.hermite_mode_kernel(0.5, np.arange(1, 17)), atol=1e-12)
    with pytest.raises(ValueError, match="dt > 0"):
        ou_service.angle_mode_kernel(kernel_service.hermite_angle_kernel, 0.0, 16)


def test_simulation_stability_margin():
    with pytest.raises(ValueError, match="instability margin"):
        ou_service.simulate(ou_service.hermite_spectral(4), 1.0, 0.2)


def test_simulated_statistics_match_the_stationary_law():
    spectral = ou_service.hermite_spectral(3)
    trajectory = ou_service.simulate(spectral, t_end=2.0, dt=0.01, seed=3, replicas=500)
    assert trajectory.coefficients.shape[1:] == (500, 3)
    stats = ou_service.mode_statistics(trajectory, lag=0.3)
    assert np.all(np.abs(stats['variance'] - spectral.stationary_cov) < 5 * stats['variance_se'])
    expected = np.exp(-spectral.drift * stats['lag']) * spectral.stationary_cov
    assert np.all(np.abs(stats['lag_covariance'] - expected) < 5 * stats['lag_covariance_se'])
    with pytest.raises(ValueError, match="lag exceeds"):
        ou_service.mode_statistics(trajectory, lag=5.0)


def test_simulation_is_seeded():
    spectral = ou_service.hermite_spectral(2)
    first = ou_service.simulate(spectral, 0.5, 0.01, seed=9, replicas=2)
    second = ou_service.simulate(spectral, 0.5, 0.01, seed=9, replicas=2)
    np.testing.assert_array_equal(first.coefficients, second.coefficients)
    fixed = ou_service.simulate(spectral, 0.5, 0.01, seed=9, initial=np.zeros(2))
    np.testing.assert_array_equal(fixed.coefficients[0], 0.0)


def test_assemble_field_and_tail():
    theta = np.linspace(0.0, np.pi, 7)
    field = ou_service.assemble_field(np.eye(3), [1, 2, 3], theta)
    for k in range(3):
        np.testing.assert_allclose(field[k], np.sqrt(2.0) * np.cos((k + 1) * theta))
    spectral = OUSpectral([1, 2, 3], [1.0, 2.0, 3.0], [0.1, 0.4, 0.9], [0.1, 0.2, 0.3])
    assert ou_service.truncation_tail(spectral, 1) == pytest.approx(1.3)
    with pytest.raises(ValueError):
        OUSpectral([1, 2], [1.0, np.nan], [1.0, 1.0], [1.0, 1.0])
