import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from ..exceptions import NumericalError
from ..models.density import EquilibriumDensity
from ..models.hydro import HydroField
from ..models.kernel import KernelMethod, KernelValue, Sign
from .hydro_service import CharacteristicSystem, flow_points, pull_back
from .kernel_service import combine, johansson_factor
from .potential_service import potential_of
from .utils import richardson

logger = logging.getLogger(__name__)

Source = Union[EquilibriumDensity, HydroField]


def equal_time_slice(density, beta: float, x2: float, sign: Sign) -> Callable:
    """w ↦ g^{+,±}(0; w, x2), the Johansson kernel continued in its first argument"""
    edge = density.edge
    if abs(x2) >= edge:
        raise ValueError("x2 must lie inside the open support")
    s = Sign.parse(sign).value
    theta2 = np.arccos(x2 / edge)
    factor = johansson_factor(edge, beta)

    def slice_(w):
        theta = np.arccos(np.asarray(w, dtype=complex) / edge)
        return factor / (8.0 * np.sin(theta) * np.sin(s * theta2) * np.sin((theta + s * theta2) / 2.0) ** 2)
    return slice_


class EquilibriumVelocity:
    """v(z) = (β/2)U(z) + V'(z) for a closed-form equilibrium"""

    def __init__(self, density: EquilibriumDensity):
        self.density = density
        self.beta = density.beta
        potential = potential_of(density)
        self._v = [potential.derivative_coeffs(k) for k in (1, 2)]

    def __call__(self, z, order: int = 0):
        return 0.5 * self.beta * self.density.stieltjes(z, order) + P.polyval(z, self._v[order])


def _transport_equilibrium(density: EquilibriumDensity, z: np.ndarray, dt: float,
                           rtol: float = 1e-12, atol: float = 1e-14) -> Tuple[np.ndarray, np.ndarray]:
    """Follow dz/ds = v(z) for s ∈ [0, Δ] and accumulate ∫ v'(z) ds"""
    velocity = EquilibriumVelocity(density)
    m = len(z)

    def rhs(s, y):
        position = y[:m]
        return np.concatenate([velocity(position), velocity(position, 1)])

    y0 = np.concatenate([z, np.zeros(m, dtype=complex)])
    result = integrate.solve_ivp(rhs, (0.0, dt), y0, method='RK45', rtol=rtol, atol=atol)
    if not result.success:
        raise NumericalError(f"kernel transport failed: {result.message}", {'dt': dt})
    end = result.y[:, -1]
    if np.any(end[:m].imag < 0):
        raise NumericalError("characteristic leaves resolved region", {'dt': dt})
    return end[:m], np.exp(end[m:])


def _transport_field(field: HydroField, z: np.ndarray, t1: float, t2: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Points at time t2 carried to z at t1, and the gain δz_t2 / δz_t1 = exp(∫ v')"""
    w, state, _ = pull_back(field, t1, z)
    if t2 == 0:
        return w, 1.0 / state[3]
    early = flow_points(field, w, t2, order=1)
    return early[0], early[3] / state[3]


def transport_slice(source: Source, slice_: Callable, dt: float, t2: float = 0.0) -> Callable:
    """The slice at t2 carried forward by dt: a callable on points at time t2 + dt"""
    if dt < 0:
        raise ValueError("transport needs a nonnegative lag")
    if t2 < 0 or (isinstance(source, HydroField) and t2 + dt > source.t_end * (1 + 1e-12)):
        raise ValueError(f"[{t2}, {t2 + dt}] is outside the solved range of the source")

    def transported(z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if dt == 0:
            return slice_(z)
        if isinstance(source, HydroField):
            w, gain = _transport_field(source, z, t2 + dt, t2)
        else:
            w, gain = _transport_equilibrium(source, z, dt)
        return slice_(w) * gain
    return transported


def pde_evolve_kernel(source: Source, x1, x2: float, dt: float, sign: Sign = Sign.PLUS,
                      initial_slice: Optional[Callable] = None,
                      eps: Sequence[float] = (1e-4, 5e-5), t2: float = 0.0) -> np.ndarray:
    """g^{+,±}(t2 + Δ, x1; t2, x2) by transporting an equal-time slice along characteristics.

    The kernel obeys ∂_t g = ∂_x(v g) with v = (β/2)U_t(x + i0) + V'. Values are
    computed at x1 + iε for the two levels in eps and Richardson-extrapolated to
    the axis. An equilibrium source is stationary, so t2 only labels the result;
    a HydroField starting at t2 > 0 needs the slice g(t2, ·; t2, x2) passed in.
    """
    if dt < 0:
        raise ValueError("pde_evolve_kernel needs t1 >= t2")
    if initial_slice is None and isinstance(source, HydroField) and t2 > 0:
        raise ValueError("A HydroField source starting at t2 > 0 needs the equal-time slice at t2")
    x1_arr = np.atleast_1d(np.asarray(x1, dtype=float))
    density = source.initial if isinstance(source, HydroField) else source
    slice_ = initial_slice or equal_time_slice(density, source.beta, x2, sign)
    transported = transport_slice(source, slice_, dt, t2 if isinstance(source, HydroField) else 0.0)
    levels = [transported(x1_arr + 1j * level) for level in eps]
    value = richardson(levels[0], levels[1], order=1) if len(levels) == 2 else levels[0]
    return complex(value[0]) if np.ndim(x1) == 0 else value


def pde_kernel_slots(source: Source, x1: float, x2: float, dt: float, t2: float = 0.0,
                     eps: Sequence[float] = (1e-4, 5e-5),
                     slices: Optional[Callable[[Sign], Callable]] = None) -> List[KernelValue]:
    """All four sign slots; `slices` maps a sign to the equal-time slice at t2 when one is supplied"""
    plus, minus = (pde_evolve_kernel(source, x1, x2, dt, sign, None if slices is None else slices(sign),
                                     eps=eps, t2=t2)
                   for sign in (Sign.PLUS, Sign.MINUS))
    real = float(combine(plus, minus))
    slots = {(Sign.PLUS, Sign.PLUS): plus, (Sign.PLUS, Sign.MINUS): minus,
             (Sign.MINUS, Sign.PLUS): np.conj(minus), (Sign.MINUS, Sign.MINUS): np.conj(plus)}
    return [KernelValue(t2 + dt, x1, t2, x2, signs, complex(value), KernelMethod.PDE_CHARACTERISTICS, real)
            for signs, value in slots.items()]


def weak_residual(source: EquilibriumDensity, x2: float, t: float, sign: Sign = Sign.PLUS,
                  phi: Optional[Callable] = None, h: float = 1e-2, points: int = 257,
                  eps: Sequence[float] = (1e-4, 5e-5)) -> complex:
    """d/dt ∫φ g dx + ∫φ' v g dx for the transported kernel of an equilibrium source.

    The default test function is (A² − x²)², which vanishes at both edges.
    """
    if t - h <= 0:
        raise ValueError("weak_residual needs t > h")
    edge = source.edge
    if phi is None:
        def phi(x):
            return (edge ** 2 - x ** 2) ** 2

        def dphi(x):
            return -4.0 * x * (edge ** 2 - x ** 2)
    else:
        def dphi(x):
            return (phi(x + 1e-6) - phi(x - 1e-6)) / 2e-6
    theta = np.linspace(0.0, np.pi, points)[1:-1]
    xs = edge * np.cos(theta)
    jac = edge * np.sin(theta)

    def pairing(weight, tt):
        g = pde_evolve_kernel(source, xs, x2, tt, sign, eps=eps)
        return integrate.simpson(weight(xs) * g * jac, x=theta)

    velocity = EquilibriumVelocity(source)(xs + 0j)
    time_part = (pairing(phi, t + h) - pairing(phi, t - h)) / (2.0 * h)
    g_now = pde_evolve_kernel(source, xs, x2, t, sign, eps=eps)
    flux_part = integrate.simpson(dphi(xs) * velocity * g_now * jac, x=theta)
    residual = complex(time_part + flux_part)
    logger.debug(f"Weak-form residual at t={t}: {abs(residual):.3g}")
    return residual


class _MeanSystem:
    def __init__(self, source: Source):
        self.source = source
        self.beta = source.beta
        if isinstance(source, HydroField):
            self.chars = CharacteristicSystem(source.potential, source.beta, source.moments, order=2)
            self._v2 = source.potential.derivative_coeffs(2)
        else:
            self.velocity = EquilibriumVelocity(source)

    def initial_state(self, z0: complex, m0: complex) -> np.ndarray:
        if isinstance(self.source, HydroField):
            base = self.chars.initial_state(np.array([z0]), lambda w, k: self.source.initial.stieltjes(w, k))
            return np.concatenate([base, [m0]])
        return np.array([z0, m0], dtype=complex)

    def derivatives(self, y) -> Tuple[complex, complex, complex]:
        """(z, U'_t(z), U''_t(z)) from the current state"""
        if isinstance(self.source, HydroField):
            z, _, _, dz, dc, d2z, d2c = y[:7]
            return z, -dc / dz, -(d2c * dz - dc * d2z) / dz ** 3
        z = y[0]
        return z, self.source.stieltjes(z, 1), self.source.stieltjes(z, 2)

    def __call__(self, t, y):
        z, u1, u2 = self.derivatives(y)
        m = y[-1]
        if isinstance(self.source, HydroField):
            head = self.chars(t, y[:7])
            dv = 0.5 * self.beta * u1 + P.polyval(z, self._v2)
        else:
            head = np.array([-self.velocity(z)])
            dv = self.velocity(z, 1)
        source_term = 0.5 * (1.0 - 0.5 * self.beta) * u2
        return np.concatenate([head, [dv * m + source_term]])


def mean_evolution(source: Source, z0: complex, times: Sequence[float], m0: complex = 0.0,
                   rtol: float = 1e-10, atol: float = 1e-12) -> List[Tuple[float, complex, complex]]:
    """E[(SY_t)(z(t))] along the characteristic ż = −v from z0.

    dm/dt = v'(z) m + ½(1 − β/2) U''_t(z); rows are (t, z(t), m).
    """
    if np.imag(z0) <= 0:
        raise ValueError("mean_evolution starts in the open upper half plane")
    times = np.asarray(times, dtype=float)
    system = _MeanSystem(source)
    y0 = system.initial_state(complex(z0), complex(m0))

    def crossed(t, y):
        return y[0].imag
    crossed.terminal = True
    crossed.direction = -1

    result = integrate.solve_ivp(system, (0.0, float(times[-1])), y0, method='RK45', rtol=rtol,
                                 atol=atol, t_eval=times, events=crossed)
    if result.status == 1:
        raise NumericalError("characteristic left the upper half plane",
                             {'z0': complex(z0), 't': float(result.t_events[0][0])})
    if not result.success:
        raise NumericalError(f"mean evolution failed: {result.message}", {'z0': complex(z0)})
    return [(float(t), complex(result.y[0, i]), complex(result.y[-1, i])) for i, t in enumerate(result.t)]


def stationary_mean(density: EquilibriumDensity, z):
    """m(z) = −(1 − β/2) U'(z)/(2 v(z)), the time-independent mean at equilibrium"""
    velocity = EquilibriumVelocity(density)
    beta = density.beta
    return -(1.0 - 0.5 * beta) * density.stieltjes(z, 1) / (2.0 * velocity(z))


def mean_moment(density: EquilibriumDensity, k: int, radius: Optional[float] = None,
                points: int = 512) -> float:
    """∫ x^k dμ of the mean measure, read off −(1/2πi)∮ z^k m(z) dz on a circle"""
    radius = 2.0 * density.edge if radius is None else radius
    angles = 2.0 * np.pi * np.arange(points) / points
    z = radius * np.exp(1j * angles)
    integrand = z ** k * stationary_mean(density, z) * 1j * z
    return float(np.real(-np.mean(integrand) * 2.0 * np.pi / (2j * np.pi)))
