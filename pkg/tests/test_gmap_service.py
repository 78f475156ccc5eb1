import numpy as np
import pytest

from loggas.models.density import TabulatedDensity
from loggas.models.grid import GridFunction
from loggas.models.kernel import KernelMethod, Sign
from loggas.services import gmap_service, kernel_pde_service, kernel_service
from loggas.services.potential_service import equilibrium_density, harmonic, quartic


@pytest.fixture(scope='module')
def hermite_map():
    return gmap_service.g_map_build(equilibrium_density(harmonic(), 2.0), 2.0)


@pytest.fixture(scope='module')
def quartic_density():
    return equilibrium_density(quartic(0.0), 2.0)


def test_hermite_g_map_table(hermite_map):
    np.testing.assert_allclose(hermite_map.values, gmap_service.hermite_g_map(hermite_map.xs), atol=1e-9)
    assert np.all(np.diff(hermite_map.values) > 0)


def test_g_map_needs_a_closed_form_density():
    xs = np.linspace(-1.0, 1.0, 11)
    with pytest.raises(ValueError, match="closed-form"):
        gmap_service.g_map_build(TabulatedDensity(GridFunction(xs, 1.0 - xs ** 2), 2.0), 2.0)


@pytest.mark.parametrize('x1, t', [(0.3, 0.2), (-0.9, 0.5), (1.1, 0.1)])
def test_continuation_flow_matches_the_arcsine_inverse(hermite_map, x1, t):
    phase = np.arcsin(x1 / np.sqrt(2.0)) + 1j * t
    z = gmap_service.continuation_flow(hermite_map, x1, t)
    assert abs(z - np.sqrt(2.0) * np.sin(phase)) < 1e-9
    assert gmap_service.g_residual(hermite_map, x1, z, t) < 1e-8


def test_continuation_flow_domain(hermite_map):
    assert gmap_service.continuation_flow(hermite_map, 0.4, 0.0) == 0.4
    with pytest.raises(ValueError, match="open support"):
        gmap_service.continuation_flow(hermite_map, 1.5, 0.1)


@pytest.mark.parametrize('c', [0.0, 1.0])
def test_quartic_closed_forms(c):
    density = equilibrium_density(quartic(c), 2.0)
    gmap = gmap_service.g_map_build(density, 2.0)
    edge = density.edge
    np.testing.assert_allclose(gmap.values, gmap_service.quartic_g_map(gmap.xs, edge, c), atol=1e-9)
    tau, _ = gmap_service.quartic_constants(edge, c)
    for x1 in (0.4 * edge, -0.7 * edge):
        t = 0.3 * tau
        expected = gmap_service.quartic_flow(x1, t, edge, c)
        assert abs(gmap_service.continuation_flow(gmap, x1, t) - expected) < 1e-7
        assert expected.imag > 0


def test_stationary_kernel_matches_hermite(hermite_map):
    for dt, x1, x2 in ((0.5, 0.3, -0.4), (0.2, -1.0, 0.6), (0.9, 0.8, 0.75)):
        expected = kernel_service.hermite_g(dt, x1, x2)
        value = gmap_service.stationary_two_time_g(hermite_map, dt, 0.0, x1, x2)
        assert value == pytest.approx(expected, rel=1e-8, abs=1e-10)
        split = gmap_service.stationary_two_time_g(hermite_map, dt, 0.0, x1, x2, split=True)
        assert split == pytest.approx(expected, rel=1e-8, abs=1e-10)


def test_stationary_slots_are_conjugate_pairs(hermite_map):
    slots = {v.signs: v for v in gmap_service.stationary_slots(hermite_map, 1.2, 0.7, 0.3, -0.4)}
    assert slots[(Sign.MINUS, Sign.MINUS)].value == pytest.approx(np.conj(slots[(Sign.PLUS, Sign.PLUS)].value))
    assert all(v.method is KernelMethod.G_MAP for v in slots.values())
    assert slots[(Sign.PLUS, Sign.PLUS)].t2 == 0.7


def test_stationary_kernel_domain(hermite_map, quartic_density):
    with pytest.raises(ValueError, match="t1 >= t2"):
        gmap_service.stationary_two_time_g(hermite_map, 0.0, 0.5, 0.3, -0.4)
    with pytest.raises(ValueError, match="on-diagonal"):
        gmap_service.stationary_two_time_g(hermite_map, 0.0, 0.0, 0.3, 0.3)
    gmap = gmap_service.g_map_build(quartic_density, 2.0)
    with pytest.raises(ValueError, match="split-time"):
        gmap_service.stationary_two_time_g(gmap, 0.5, 0.0, 0.3, -0.4, split=True)


@pytest.mark.parametrize('family', [harmonic(), quartic(0.0)])
def test_minus_slots_follow_the_flipped_flow(family):
    density = equilibrium_density(family, 2.0)
    gmap = gmap_service.g_map_build(density, 2.0)
    x1, x2, dt = 0.35 * density.edge, -0.3 * density.edge, 0.4
    z = gmap_service.continuation_flow(gmap, x1, dt)
    flipped = np.conj(z)
    assert abs(gmap_service.g_value(gmap, flipped) - gmap_service.g_value(gmap, x1) + 1j * np.pi * dt) < 1e-8
    slots = {v.signs: v.value for v in gmap_service.stationary_slots(gmap, dt, 0.0, x1, x2)}
    rho = float(density.density(x1))
    for sign, partner in ((Sign.PLUS, Sign.MINUS), (Sign.MINUS, Sign.PLUS)):
        value = complex(gmap_service.continued_johansson(gmap, flipped, x2, sign)) / rho
        assert value == pytest.approx(slots[(Sign.MINUS, partner)], rel=1e-10, abs=1e-12)


@pytest.mark.parametrize('x1, x2, dt', [(0.4, -0.3, 0.3), (-0.6, 0.2, 0.2)])
def test_quartic_kernel_agrees_with_the_pde(quartic_density, x1, x2, dt):
    gmap = gmap_service.g_map_build(quartic_density, 2.0)
    value = gmap_service.stationary_two_time_g(gmap, dt, 0.0, x1, x2)
    slots = kernel_pde_service.pde_kernel_slots(quartic_density, x1, x2, dt)
    assert slots[0].real_kernel == pytest.approx(value, rel=1e-6, abs=1e-7)
