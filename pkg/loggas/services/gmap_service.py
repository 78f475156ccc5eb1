import logging
from typing import List, Tuple

import numpy as np
from scipy import integrate

from ..exceptions import NumericalError
from ..models.density import EquilibriumDensity
from ..models.kernel import GMap, KernelMethod, KernelValue, Sign
from ..models.potential import PotentialFamily
from .kernel_service import combine, johansson_factor

logger = logging.getLogger(__name__)

EDGE_DISTANCE = 1e-6


def g_map_build(density, beta: float, points: int = 401) -> GMap:
    """Tabulate G(x) = (2/β)∫₀ˣ dy/ρ(y) on the open support"""
    if not isinstance(density, EquilibriumDensity):
        raise ValueError("The G-map needs a closed-form one-cut density")
    edge = density.edge
    xs = edge * np.cos(np.linspace(np.pi, 0.0, points + 2)[1:-1])
    if np.any(np.real(density.analytic_factor(xs)) <= 0):
        raise NumericalError("density vanishing in interior", {'edge': edge})
    gmap = GMap(beta, density, xs, np.zeros_like(xs))
    gmap.values = np.real(g_value(gmap, xs))
    if np.any(np.diff(gmap.values) <= 0):
        raise NumericalError("G-map not increasing on the support")
    return gmap


def _phase_integrand(gmap: GMap, phi):
    return 1.0 / gmap.density.analytic_factor(gmap.edge * np.sin(phi))


def g_value(gmap: GMap, z):
    """G(z), continued to Π₊ through y = A sin φ so the edge singularity disappears"""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    phis = np.arcsin(z_arr / gmap.edge)
    values = np.empty(len(z_arr), dtype=complex)
    for i, phi in enumerate(phis):
        def part(s, take):
            return take(_phase_integrand(gmap, s * phi) * phi)
        re, _ = integrate.quad(part, 0.0, 1.0, args=(np.real,), epsabs=1e-14, epsrel=1e-13, limit=200)
        im, _ = integrate.quad(part, 0.0, 1.0, args=(np.imag,), epsabs=1e-14, epsrel=1e-13, limit=200)
        values[i] = (2.0 / gmap.beta) * complex(re, im)
    return values[0] if np.ndim(z) == 0 else values.reshape(np.shape(z))


def g_prime(gmap: GMap, z):
    """G'(z) = (2/β)/ρ^C(z)"""
    return (2.0 / gmap.beta) / gmap.density.continued_density(z)


def hermite_g_map(x, beta: float = 2.0):
    """G(x) = π arcsin(x/√β) for the harmonic equilibrium"""
    return np.pi * np.arcsin(np.asarray(x) / np.sqrt(beta))


def continuation_flow(gmap: GMap, x1: float, t: float, rtol: float = 1e-13, atol: float = 1e-15) -> complex:
    """G⁻¹(G(x1) + iπt) by integrating dz/dτ = iπ/G'(z) = (β/2)U(z) + V'(z) from x1"""
    a, b = -gmap.edge, gmap.edge
    if not a < x1 < b:
        raise ValueError("x1 must lie inside the open support")
    if t == 0:
        return complex(x1)
    speed = 0.5j * np.pi * gmap.beta

    def rhs(tau, z):
        return speed * gmap.density.continued_density(z)

    def near_edge(tau, z):
        return min(abs(z[0] - a), abs(z[0] - b)) - EDGE_DISTANCE
    near_edge.terminal = True

    result = integrate.solve_ivp(rhs, (0.0, t), np.array([x1 + 0j]), method='DOP853',
                                 rtol=rtol, atol=atol, events=near_edge)
    if result.status == 1:
        raise NumericalError("edge collision", {'x1': x1, 't': float(result.t_events[0][0])})
    if not result.success:
        raise NumericalError(f"continuation flow failed: {result.message}", {'x1': x1, 't': t})
    return complex(result.y[0, -1])


def g_residual(gmap: GMap, x1: float, z: complex, t: float) -> float:
    """|G(z) − G(x1) − iπt|"""
    return float(abs(g_value(gmap, z) - g_value(gmap, x1) - 1j * np.pi * t))


def quartic_constants(half_width: float, c: float) -> Tuple[float, float]:
    """(τ, C) with τ = [(3A²/2 + c)(A²/2 + c)]^{−1/2} and C = √((A²/2 + c)/(3A²/2 + c))"""
    inner = half_width ** 2 / 2 + c
    outer = 3 * half_width ** 2 / 2 + c
    return 1.0 / np.sqrt(outer * inner), np.sqrt(inner / outer)


def quartic_g_map(x, half_width: float, c: float):
    """G(x) = πτ arctan(x/(C√(A² − x²)))"""
    tau, C = quartic_constants(half_width, c)
    x = np.asarray(x, dtype=float)
    return np.pi * tau * np.arctan(x / (C * np.sqrt(half_width ** 2 - x ** 2)))


def quartic_flow(x1: float, t: float, half_width: float, c: float) -> complex:
    """Closed-form G⁻¹(G(x1) + iπt) for the quartic equilibrium"""
    if x1 < 0:
        return -np.conj(quartic_flow(-x1, t, half_width, c))
    tau, C = quartic_constants(half_width, c)
    psi = np.arctan(x1 / (C * np.sqrt(half_width ** 2 - x1 ** 2))) + 1j * t / tau
    return _quartic_from_angle(psi, half_width, C)


def _quartic_from_angle(psi: complex, half_width: float, C: float) -> complex:
    tangent = C * np.tan(psi)
    z = half_width * tangent / np.sqrt(1.0 + tangent ** 2)
    return complex(-z if z.imag < 0 else z)


def _angle(gmap: GMap, z):
    return np.arccos(np.asarray(z, dtype=complex) / gmap.edge)


def continued_johansson(gmap: GMap, z, x2: float, sign: Sign):
    """F₀^±(z, x2) = ρ^C(z)·g^{+,±}(0; z, x2), analytic in z ∈ Π₊"""
    edge = gmap.edge
    s = Sign.parse(sign).value
    theta2 = np.arccos(x2 / edge)
    factor = johansson_factor(edge, gmap.beta)
    return (factor * edge * gmap.density.analytic_factor(z)
            / (8.0 * np.sin(s * theta2) * np.sin((_angle(gmap, z) + s * theta2) / 2.0) ** 2))


def stationary_slots(gmap: GMap, t1: float, t2: float, x1: float, x2: float,
                     split: bool = False) -> List[KernelValue]:
    """g^{ε1,ε2}(t1, x1; t2, x2) of the stationary equilibrium from the G-map flow.

    The default evaluates F₀^±(G⁻¹(G(x1) + iπΔ), x2)/ρ(x1). With split=True both
    arguments are flowed by Δ/2, which is exact when G is an affine function of the
    angle (harmonic potential).
    """
    dt = t1 - t2
    if dt < 0:
        raise ValueError("stationary kernels need t1 >= t2")
    edge = gmap.edge
    if not (abs(x1) < edge and abs(x2) < edge):
        raise ValueError("x1 and x2 must lie inside the open support")
    if dt == 0 and x1 == x2:
        raise ValueError("on-diagonal distribution: x1 == x2 at equal times")
    values = {}
    if split:
        if gmap.density.family is not PotentialFamily.HARMONIC:
            raise ValueError("the split-time form is exact only for the harmonic potential")
        z1 = continuation_flow(gmap, x1, dt / 2.0)
        z2 = continuation_flow(gmap, x2, dt / 2.0)
        theta1, theta2 = np.arccos(x1 / edge), np.arccos(x2 / edge)
        factor = johansson_factor(edge, gmap.beta)
        for sign, partner in ((Sign.PLUS, z2), (Sign.MINUS, np.conj(z2))):
            s = sign.value
            w = _angle(gmap, z1) + s * _angle(gmap, partner)
            values[sign] = complex(factor / (8.0 * np.sin(theta1) * np.sin(s * theta2) * np.sin(w / 2.0) ** 2))
    else:
        z = continuation_flow(gmap, x1, dt)
        rho = float(gmap.density.density(x1))
        for sign in (Sign.PLUS, Sign.MINUS):
            values[sign] = complex(continued_johansson(gmap, z, x2, sign)) / rho
    real = float(combine(values[Sign.PLUS], values[Sign.MINUS]))
    slots = {(Sign.PLUS, Sign.PLUS): values[Sign.PLUS], (Sign.PLUS, Sign.MINUS): values[Sign.MINUS],
             (Sign.MINUS, Sign.PLUS): np.conj(values[Sign.MINUS]),
             (Sign.MINUS, Sign.MINUS): np.conj(values[Sign.PLUS])}
    return [KernelValue(t1, x1, t2, x2, signs, complex(value), KernelMethod.G_MAP, real)
            for signs, value in slots.items()]


def stationary_two_time_g(gmap: GMap, t1: float, t2: float, x1: float, x2: float,
                          split: bool = False) -> float:
    """Real covariance kernel g(t1, x1; t2, x2) of the stationary fluctuation field"""
    return stationary_slots(gmap, t1, t2, x1, x2, split)[0].real_kernel
