import numpy as np
import pytest

from loggas.exceptions import NumericalError
from loggas.models.grid import GridFunction
from loggas.services import transform_service


def _semicircle_grid(points=2 ** 13 + 1, extent=1.5):
    edge = np.sqrt(2.0)
    xs = np.linspace(-extent * edge, extent * edge, points)
    return GridFunction(xs, np.sqrt(np.clip(2.0 - xs ** 2, 0.0, None)) / np.pi)


def test_grid_stieltjes_matches_closed_form(semicircle):
    z = 0.5 + 1.0j
    value = transform_service.stieltjes(_semicircle_grid(20001, 1.0), z)
    assert abs(value - semicircle.stieltjes(z)) < 1e-4


def test_callable_stieltjes_and_derivatives(semicircle):
    z = np.array([0.2 + 0.5j, -1.0 + 0.1j])
    for order in (0, 1):
        value = transform_service.stieltjes(semicircle.density, z, order=order, support=semicircle.support)
        np.testing.assert_allclose(value, semicircle.stieltjes(z, order), rtol=1e-8)


def test_stieltjes_rejects_points_on_the_support(semicircle):
    with pytest.raises(ValueError, match="boundary_value"):
        transform_service.stieltjes(_semicircle_grid(), 0.1)
    with pytest.raises(ValueError, match="support"):
        transform_service.stieltjes(semicircle.density, 1.0j)


def test_periodic_hilbert_maps_cosine_to_sine():
    theta = 2 * np.pi * np.arange(64) / 64
    coeffs = np.fft.fft(np.cos(3 * theta))
    transformed = np.fft.ifft(transform_service.hilbert_periodic(coeffs)).real
    np.testing.assert_allclose(transformed, np.sin(3 * theta), atol=1e-12)
    np.testing.assert_allclose(transform_service.periodic_hilbert_grid(np.cos(3 * theta)),
                               np.sin(3 * theta), atol=1e-12)
    np.testing.assert_allclose(transform_service.periodic_hilbert_grid(np.cos(3 * theta), derivative=True),
                               3 * np.cos(3 * theta), atol=1e-11)


def test_periodic_hilbert_needs_zero_mean():
    theta = 2 * np.pi * np.arange(32) / 32
    with pytest.raises(ValueError, match="zero-mean"):
        transform_service.periodic_hilbert_grid(1.0 + np.cos(theta))


def test_hilbert_line_solves_the_cut_equation(semicircle):
    # Equilibrium of V = x²/2 at β = 2: π·Hρ = V'
    residual, points = transform_service.cut_equation_residual(semicircle, 2.0, lambda x: x)
    assert residual <= 1e-6
    assert points >= 2 ** 13 + 1


def test_cut_equation_reports_a_coarse_grid(semicircle):
    with pytest.raises(NumericalError, match="grid too coarse") as info:
        transform_service.cut_equation_residual(semicircle, 2.0, lambda x: x, tol=1e-14, points=2 ** 9 + 1,
                                                max_points=2 ** 11 + 1)
    assert info.value.diagnostics['points'] == 2 ** 11 + 1


def test_boundary_value_of_the_semicircle():
    value = transform_service.boundary_value(_semicircle_grid(), 0.3)
    assert abs(value - complex(-0.3, np.sqrt(2.0 - 0.09))) < 1e-3


def test_plemelj_density_from_above(semicircle):
    x = np.linspace(-1.2, 1.2, 13)
    rho = transform_service.plemelj_density(semicircle.stieltjes, x, eps=1e-3)
    np.testing.assert_allclose(rho, semicircle.density(x), atol=1e-4)


def test_plemelj_density_rejects_negative_values():
    with pytest.raises(NumericalError, match="not a density"):
        transform_service.plemelj_density(lambda x: -1j * np.ones_like(x, dtype=complex), np.zeros(3))


def test_near_edge_mask():
    mask = transform_service.near_edge_mask([-1.0005, 0.0, 0.9999], (-1.0, 1.0))
    assert mask.tolist() == [True, False, True]


def test_stieltjes_is_herglotz_on_random_densities():
    rng = np.random.default_rng(3)
    for _ in range(10):
        xs = np.linspace(rng.uniform(-3.0, -1.0), rng.uniform(1.0, 3.0), 2 * int(rng.integers(20, 200)) + 1)
        values = rng.exponential(size=len(xs)) * (rng.uniform(size=len(xs)) < 0.7)
        z = rng.uniform(-4.0, 4.0, 50) + 1j * 10.0 ** rng.uniform(-3.0, 0.5, 50)
        transform = transform_service.stieltjes(GridFunction(xs, values), z)
        assert np.all(transform.imag > 0)
