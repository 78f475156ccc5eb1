from types import SimpleNamespace

import numpy as np
import pytest

from loggas.models.edge import Side
from loggas.services import support_service
from loggas.services.hydro_service import scaling_solution, solve_moments
from loggas.services.potential_service import equilibrium_density, harmonic, scaled_semicircle


@pytest.fixture(scope='module')
def contracting_flow():
    initial = scaled_semicircle(2.0, 2.0)
    moments = solve_moments(harmonic(), 2.0, initial, 1.0)
    return support_service.RealFlow(harmonic(), 2.0, initial, moments)


def test_scaling_edge():
    assert support_service.scaling_edge(2.0, 1.0, 0.4) == pytest.approx(np.sqrt(2.0))
    assert support_service.scaling_edge(2.0, 2.0, 0.0) == pytest.approx(2.0 * np.sqrt(2.0))


@pytest.mark.parametrize('t', [0.25, 0.5, 1.0])
def test_right_edge_of_the_scaling_solution(contracting_flow, t):
    point = support_service.edge(contracting_flow, t, Side.RIGHT)
    assert not point.boundary_case
    assert point.x_star > 2.0 * np.sqrt(2.0)
    assert point.position == pytest.approx(np.sqrt(2.0) * scaling_solution(2.0, t), abs=1e-6)
    residual = support_service.preimage_identity_residual(point.x_star, 2.0 * np.sqrt(2.0), t, 2.0)
    assert abs(residual) < 1e-8


def test_left_edge_mirrors_the_right(contracting_flow):
    left = support_service.edge(contracting_flow, 0.5, Side.LEFT)
    right = support_service.edge(contracting_flow, 0.5, Side.RIGHT)
    assert left.position == pytest.approx(-right.position, abs=1e-8)
    assert left.x_star == pytest.approx(-right.x_star, abs=1e-8)


def test_equilibrium_edge_does_not_move():
    density = equilibrium_density(harmonic(), 2.0)
    moments = solve_moments(harmonic(), 2.0, density, 0.5)
    flow = support_service.RealFlow(harmonic(), 2.0, density, moments)
    point = support_service.edge(flow, 0.5)
    assert point.position == pytest.approx(np.sqrt(2.0), abs=1e-6)


def test_track_support_and_jumps(contracting_flow):
    trajectory = support_service.track_support(contracting_flow, [0.25, 0.5, 0.75, 1.0])
    expected = support_service.scaling_edge(2.0, 2.0, trajectory.times)
    np.testing.assert_allclose(trajectory.b, expected, atol=1e-6)
    np.testing.assert_allclose(trajectory.a, -expected, atol=1e-6)
    assert np.all(trajectory.jacobian_margin > 0)
    assert len(trajectory.rows()) == 4
    report = support_service.jump_report(trajectory)
    assert report.ok
    assert report.downward == []


def test_jump_report_flags_discontinuities(contracting_flow):
    trajectory = support_service.track_support(contracting_flow, [0.25, 0.5], (Side.RIGHT,))
    trajectory.b = np.array([1.0, 3.0])
    report = support_service.jump_report(trajectory, speed_bound=0.1)
    assert report.upward == [0]
    assert report.largest_upward == pytest.approx(2.0)
    assert not report.ok


def test_real_characteristics_start_outside_the_support(contracting_flow):
    with pytest.raises(ValueError, match="outside"):
        support_service.real_characteristic_with_jacobian(contracting_flow, 0.0, 0.5)
    x, jacobian = support_service.real_characteristic_with_jacobian(contracting_flow, 10.0, 0.0)
    assert x == pytest.approx(10.0)
    assert jacobian == pytest.approx(1.0)


def test_expanding_edge_grows_monotonically():
    initial = scaled_semicircle(2.0, 0.5)
    moments = solve_moments(harmonic(), 2.0, initial, 1.0)
    flow = support_service.RealFlow(harmonic(), 2.0, initial, moments)
    trajectory = support_service.track_support(flow, [0.1, 0.25, 0.5, 1.0])
    expected = support_service.scaling_edge(2.0, 0.5, trajectory.times)
    np.testing.assert_allclose(trajectory.b, expected, atol=1e-6)
    np.testing.assert_allclose(trajectory.a, -expected, atol=1e-6)
    assert np.all(np.diff(trajectory.b) > 0)
    assert np.all(np.diff(trajectory.a) < 0)


class DipFlow:
    """Z'_t nonpositive below offset 0.5 and again on the narrow window (0.52, 0.525)"""
    initial = SimpleNamespace(support=(-1.0, 1.0))

    def run(self, x0, t, jacobian=True):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        offset = x0 - 1.0
        slope = np.minimum(offset - 0.5, np.abs(offset - 0.5225) - 0.0025)
        return np.vstack([x0, np.zeros_like(x0), slope, np.zeros_like(x0)])


def test_scan_refinement_finds_a_sign_change_between_samples():
    offsets = support_service._scan_offsets(1.0)
    assert not np.any((offsets > 0.52) & (offsets < 0.525))
    point = support_service.edge(DipFlow(), 0.5)
    assert not point.boundary_case
    assert point.x_star == pytest.approx(1.525, abs=1e-8)
    assert point.margin > 0
