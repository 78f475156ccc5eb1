import logging
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from ..models.density import EquilibriumDensity
from ..models.potential import MomentVector, Potential, PotentialFamily

logger = logging.getLogger(__name__)


def build_potential(coeffs: Sequence[float], alpha: float, radius: float = 10.0,
                    points: int = 10_000) -> Potential:
    """Create a potential and validate its convexity bound on [−radius, radius]"""
    potential = Potential(tuple(coeffs), float(alpha))
    check_convexity(potential, radius, points)
    return potential


def harmonic() -> Potential:
    return Potential((0.0, 0.0, 0.5), 1.0)


def quartic(c: float = 0.0) -> Potential:
    if c < 0:
        raise ValueError("Quartic family requires c >= 0 (one-cut regime)")
    return Potential((0.0, 0.0, c / 2, 0.0, 0.25), c)


def check_convexity(p: Potential, radius: float = 10.0, points: int = 10_000) -> float:
    """Return min V'' on the sampled window; alpha must not exceed it"""
    xs = np.linspace(-radius, radius, points)
    lowest = float(np.min(P.polyval(xs, p.derivative_coeffs(2))))
    if p.alpha > lowest * (1 + 1e-12) + 1e-12:
        raise ValueError(f"alpha={p.alpha} exceeds min V''={lowest:.6g} on [-{radius}, {radius}]")
    logger.debug(f"{p}: min V'' = {lowest:.6g} on [-{radius}, {radius}]")
    return lowest


def eval_derivatives(p: Potential, z, order: int = 0):
    """V^(order)(z) by Horner evaluation, for real or complex z"""
    if not 0 <= order <= 3:
        raise ValueError(f"Derivative order must be between 0 and 3, got {order}")
    return P.polyval(z, p.derivative_coeffs(order))


def t_polynomial(p: Potential, m: MomentVector) -> np.ndarray:
    """Coefficients of T(z) = ∫(V'(x)−V'(z))/(x−z) ρ(x) dx in ascending degree.

    With V'(z) = Σ a_j z^j, coefficient k is Σ_{j≥k+1} a_j m_{j−1−k}.
    """
    a = p.derivative_coeffs(1)
    needed = len(a) - 2
    if m.K < needed:
        raise ValueError(f"moment order below 2n-2 (need {needed}, have {m.K})")
    coeffs = np.zeros(len(a) - 1)
    for k in range(len(coeffs)):
        coeffs[k] = sum(a[j] * m[j - 1 - k] for j in range(k + 1, len(a)))
    return coeffs


def quartic_half_width(c: float, beta: float) -> float:
    """Support half-width A of the quartic equilibrium from 3A⁴/8 + cA²/2 = β/2"""
    return float(np.sqrt(2.0 * (-c + np.sqrt(c * c + 3.0 * beta)) / 3.0))


def equilibrium_density(p: Potential, beta: float) -> EquilibriumDensity:
    """Closed-form equilibrium measure for the harmonic and quartic families"""
    if beta <= 0:
        raise ValueError("beta must be positive")
    family = p.family
    if family is PotentialFamily.HARMONIC:
        return EquilibriumDensity(family, beta, float(np.sqrt(beta)))
    if family is PotentialFamily.QUARTIC:
        c = p.quartic_c
        return EquilibriumDensity(family, beta, quartic_half_width(c, beta), c)
    raise ValueError(f"No closed-form equilibrium for {p}; use the numeric hydro path instead")


def scaled_semicircle(beta: float, s0: float) -> EquilibriumDensity:
    """Harmonic equilibrium dilated by s0: ρ₀(x) = ρ_eq(x/s0)/s0"""
    if s0 <= 0:
        raise ValueError("Scale s0 must be positive")
    return EquilibriumDensity(PotentialFamily.HARMONIC, beta, float(np.sqrt(beta)), scale=float(s0))


def mass_defect(density) -> float:
    return abs(density.integrate(lambda x: np.ones_like(x)) - 1.0)


def describe(p: Potential) -> str:
    return str(p)


def potential_of(density: EquilibriumDensity) -> Potential:
    """The potential whose equilibrium is `density` (dilations excluded)"""
    if not density.is_equilibrium:
        raise ValueError("A dilated density is not an equilibrium")
    if density.family is PotentialFamily.HARMONIC:
        return harmonic()
    return quartic(density.c)
