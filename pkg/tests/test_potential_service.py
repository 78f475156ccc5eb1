import numpy as np
import pytest

from loggas.models.density import EquilibriumDensity
from loggas.models.potential import MomentVector, Potential, PotentialFamily
from loggas.services import potential_service


def test_rejects_odd_degree_and_negative_leading_coefficient():
    with pytest.raises(ValueError, match="even"):
        Potential((0.0, 0.0, 0.0, 1.0), 0.0)
    with pytest.raises(ValueError, match="Leading coefficient"):
        Potential((0.0, 0.0, -0.5), 0.0)


def test_convexity_bound_is_checked():
    assert potential_service.check_convexity(potential_service.harmonic()) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="exceeds min V''"):
        potential_service.build_potential([0.0, 0.0, 0.5], alpha=2.0)


def test_families_and_description():
    assert potential_service.harmonic().family is PotentialFamily.HARMONIC
    assert potential_service.quartic(1.0).family is PotentialFamily.QUARTIC
    assert potential_service.quartic(1.0).quartic_c == pytest.approx(1.0)
    assert Potential((0.0, 0.3, 1.0), 2.0).family is PotentialFamily.GENERAL
    assert potential_service.describe(potential_service.harmonic()) == "V(x) = 0.5 x^2"
    with pytest.raises(ValueError):
        potential_service.quartic(-1.0)


def test_eval_derivatives():
    p = potential_service.quartic(0.0)
    assert potential_service.eval_derivatives(p, 2.0, 1) == pytest.approx(8.0)
    assert potential_service.eval_derivatives(p, 1j, 2) == pytest.approx(-3.0)
    with pytest.raises(ValueError):
        potential_service.eval_derivatives(p, 1.0, 4)


def test_harmonic_moments_are_catalan():
    density = potential_service.equilibrium_density(potential_service.harmonic(), 2.0)
    m = density.moments(6).m
    np.testing.assert_allclose(m, [1.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.625], atol=1e-15)


@pytest.mark.parametrize('beta', [1.0, 2.0, 4.0])
def test_equilibrium_mass_is_one(beta):
    for p in (potential_service.harmonic(), potential_service.quartic(0.0), potential_service.quartic(1.5)):
        density = potential_service.equilibrium_density(p, beta)
        assert potential_service.mass_defect(density) < 1e-10


def test_quartic_half_width():
    assert potential_service.quartic_half_width(0.0, 2.0) == pytest.approx((8.0 / 3.0) ** 0.25, rel=1e-14)
    # A = √2 (4/3)^{1/4} carries twice the mass of the β=2 equilibrium
    wide = EquilibriumDensity(PotentialFamily.QUARTIC, 2.0, np.sqrt(2.0) * (4.0 / 3.0) ** 0.25)
    assert wide.integrate(np.ones_like) == pytest.approx(2.0, abs=1e-9)


def test_t_polynomial():
    density = potential_service.equilibrium_density(potential_service.harmonic(), 2.0)
    np.testing.assert_allclose(potential_service.t_polynomial(potential_service.harmonic(), density.moments(2)),
                               [1.0])
    quartic = potential_service.quartic(0.0)
    m = MomentVector([1.0, 0.1, 0.4])
    # V' = z³: T(z) = m2 + m1 z + m0 z²
    np.testing.assert_allclose(potential_service.t_polynomial(quartic, m), [0.4, 0.1, 1.0])
    with pytest.raises(ValueError, match="moment order below"):
        potential_service.t_polynomial(quartic, MomentVector([1.0, 0.0]))


def test_stieltjes_decay_and_boundary_value(semicircle):
    z = 1e4j
    assert semicircle.stieltjes(z) * z == pytest.approx(-1.0, abs=1e-6)
    x = 0.3
    assert semicircle.stieltjes(x + 0j) == pytest.approx(complex(-x, np.sqrt(2.0 - x * x)), abs=1e-12)


def test_scaled_semicircle_dilates_the_support():
    density = potential_service.scaled_semicircle(2.0, 2.0)
    assert density.support == pytest.approx((-2.0 * np.sqrt(2.0), 2.0 * np.sqrt(2.0)))
    assert not density.is_equilibrium
    assert potential_service.mass_defect(density) < 1e-10
    with pytest.raises(ValueError, match="dilated"):
        potential_service.potential_of(density)
    with pytest.raises(ValueError):
        potential_service.scaled_semicircle(2.0, 0.0)


def test_general_potential_has_no_closed_form():
    with pytest.raises(ValueError, match="No closed-form"):
        potential_service.equilibrium_density(Potential((0.0, 0.3, 1.0), 2.0), 2.0)
