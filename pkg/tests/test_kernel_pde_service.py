import numpy as np
import pytest

from loggas.models.kernel import KernelMethod, Sign
from loggas.services import kernel_pde_service, kernel_service
from loggas.services.hydro_service import harmonic_characteristic
from loggas.services.potential_service import equilibrium_density, harmonic


def test_equal_time_slice_is_the_closed_form(semicircle):
    slice_ = kernel_pde_service.equal_time_slice(semicircle, 2.0, -0.4, Sign.PLUS)
    theta1, theta2 = kernel_service.hermite_angles(0.3), kernel_service.hermite_angles(-0.4)
    assert slice_(0.3 + 0j) == pytest.approx(kernel_service.hermite_lambda(0.0, theta1, theta2), rel=1e-12)
    with pytest.raises(ValueError, match="open support"):
        kernel_pde_service.equal_time_slice(semicircle, 2.0, 1.5, Sign.PLUS)


@pytest.mark.parametrize('dt, x1, x2', [(0.5, 0.3, -0.4), (0.3, -0.9, 0.2)])
def test_transported_kernel_matches_hermite(semicircle, dt, x1, x2):
    slots = kernel_pde_service.pde_kernel_slots(semicircle, x1, x2, dt)
    expected = kernel_service.hermite_g(dt, x1, x2)
    assert slots[0].real_kernel == pytest.approx(expected, rel=1e-6, abs=1e-8)
    assert all(v.method is KernelMethod.PDE_CHARACTERISTICS for v in slots)


def test_zero_lag_returns_the_initial_slice(semicircle):
    value = kernel_pde_service.pde_evolve_kernel(semicircle, 0.3, -0.4, 0.0)
    theta1, theta2 = kernel_service.hermite_angles(0.3), kernel_service.hermite_angles(-0.4)
    assert value == pytest.approx(kernel_service.hermite_lambda(0.0, theta1, theta2), rel=1e-6)
    with pytest.raises(ValueError):
        kernel_pde_service.pde_evolve_kernel(semicircle, 0.3, -0.4, -0.1)


def test_weak_form_residual_is_small(semicircle):
    residual = kernel_pde_service.weak_residual(semicircle, -0.4, 0.5)
    assert abs(residual) < 1e-3
    with pytest.raises(ValueError):
        kernel_pde_service.weak_residual(semicircle, -0.4, 0.005)


@pytest.mark.parametrize('beta, expected', [(1.0, 0.25), (2.0, 0.0), (4.0, -0.5)])
def test_mean_second_moment(beta, expected):
    density = equilibrium_density(harmonic(), beta)
    assert kernel_pde_service.mean_moment(density, 2) == pytest.approx(expected, abs=1e-10)
    assert kernel_pde_service.mean_moment(density, 1) == pytest.approx(0.0, abs=1e-12)


def test_stationary_mean_is_preserved_along_characteristics():
    density = equilibrium_density(harmonic(), 1.0)
    z0 = 0.2 + 1.0j
    rows = kernel_pde_service.mean_evolution(density, z0, [0.0, 0.1, 0.2],
                                             m0=kernel_pde_service.stationary_mean(density, z0))
    assert [round(t, 12) for t, _, _ in rows] == [0.0, 0.1, 0.2]
    for _, z, m in rows:
        assert abs(m - kernel_pde_service.stationary_mean(density, z)) < 1e-7
    assert rows[-1][1].imag < z0.imag


def test_mean_vanishes_at_beta_two():
    density = equilibrium_density(harmonic(), 2.0)
    rows = kernel_pde_service.mean_evolution(density, 0.1 + 0.8j, [0.0, 0.2])
    assert all(abs(m) < 1e-14 for _, _, m in rows)
    with pytest.raises(ValueError, match="open upper half plane"):
        kernel_pde_service.mean_evolution(density, 0.1 + 0j, [0.0, 0.2])


def test_mean_evolution_on_a_hydro_field(scaling_field):
    z0 = 0.3 + 2.0j
    rows = kernel_pde_service.mean_evolution(scaling_field, z0, [0.0, 0.1])
    expected = harmonic_characteristic(z0, 0.1, 2.0, scaling_field.initial.stieltjes(z0))
    assert abs(rows[-1][1] - expected) < 1e-8
    assert all(m == 0 for _, _, m in rows)


def test_zero_initial_kernel_stays_zero(semicircle, scaling_field):
    def zero(w):
        return np.zeros_like(w)
    assert kernel_pde_service.pde_evolve_kernel(semicircle, 0.3, -0.4, 0.5, initial_slice=zero) == 0
    values = kernel_pde_service.pde_evolve_kernel(scaling_field, np.array([0.3, -0.5]), -0.4, 0.25,
                                                  initial_slice=zero, eps=(1e-2, 5e-3), t2=0.25)
    np.testing.assert_array_equal(values, 0.0)


def test_hydro_transport_composes_over_a_later_start(scaling_field):
    base = kernel_pde_service.equal_time_slice(scaling_field.initial, 2.0, -0.4, Sign.PLUS)
    z = np.array([0.3 + 0.05j, -0.5 + 0.1j])
    direct = kernel_pde_service.transport_slice(scaling_field, base, 0.5)(z)
    halfway = kernel_pde_service.transport_slice(scaling_field, base, 0.25)
    composed = kernel_pde_service.transport_slice(scaling_field, halfway, 0.25, t2=0.25)(z)
    np.testing.assert_allclose(composed, direct, rtol=1e-6)


def test_hydro_start_after_zero_needs_a_slice(scaling_field):
    with pytest.raises(ValueError, match="equal-time slice at t2"):
        kernel_pde_service.pde_evolve_kernel(scaling_field, 0.3, -0.4, 0.1, t2=0.25)
    base = kernel_pde_service.equal_time_slice(scaling_field.initial, 2.0, -0.4, Sign.PLUS)
    with pytest.raises(ValueError, match="outside the solved range"):
        kernel_pde_service.transport_slice(scaling_field, base, 0.5, t2=0.25)


def test_mean_grows_linearly_from_zero_at_beta_one():
    density = equilibrium_density(harmonic(), 1.0)
    z0 = 0.2 + 1.0j
    rows = kernel_pde_service.mean_evolution(density, z0, [0.0, 1e-3, 2e-3])
    rate = 0.5 * (1.0 - 0.5) * density.stieltjes(z0, 2)
    assert rows[1][2] / 1e-3 == pytest.approx(rate, rel=1e-2)
    assert abs(rows[2][2]) > abs(rows[1][2]) > 0
