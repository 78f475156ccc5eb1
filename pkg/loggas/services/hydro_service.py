import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate
from scipy.interpolate import LinearNDInterpolator

from ..exceptions import NumericalError
from ..models.hydro import CharState, Closure, FanSnapshot, HydroField
from ..models.potential import MomentVector, Potential
from ..models.scenario import HydroSettings
from .potential_service import t_polynomial
from .transform_service import plemelj_density
from .utils import chunked, map_chunks

logger = logging.getLogger(__name__)

NEWTON_ITERATIONS = 12


def scaling_solution(s0: float, t: float):
    """s(t) = √(1 + e^{−2t}(s0² − 1)), the dilation of the harmonic scaling solution"""
    if s0 <= 0:
        raise ValueError("Scale s0 must be positive")
    return np.sqrt(1.0 + np.exp(-2.0 * np.asarray(t, dtype=float)) * (s0 * s0 - 1.0))


def closure_margin(p: Potential) -> int:
    """Moments beyond K referenced by the top equation of the hierarchy"""
    return p.degree - 2


def moment_rhs(m: MomentVector, p: Potential, beta: float, order: Optional[int] = None) -> np.ndarray:
    """dm_k/dt for k = 0..order.

    dm_k/dt = −k Σ_j a_j m_{k−1+j} + (β/4) k Σ_{i+j=k−2} m_i m_j, where V' = Σ a_j x^j.
    The vector m must hold moments up to order + deg V − 2.
    """
    a = p.derivative_coeffs(1)
    order = m.K - closure_margin(p) if order is None else order
    needed = order + closure_margin(p)
    if order < 0 or needed > m.K:
        raise ValueError(f"closure underflow: moment m_{needed} needed, have up to m_{m.K}")
    moments = m.m
    rate = np.zeros(order + 1)
    for k in range(1, order + 1):
        confinement = sum(a[j] * moments[k - 1 + j] for j in range(len(a)))
        repulsion = sum(moments[i] * moments[k - 2 - i] for i in range(k - 1))
        rate[k] = -k * confinement + 0.25 * beta * k * repulsion
    return rate


class MomentTrajectory:
    """Dense solution of the closed moment hierarchy m_0..m_K on [0, t_end]"""

    def __init__(self, potential: Potential, beta: float, order: int, closure: Closure,
                 solution, tail: np.ndarray, t_end: float, mass_residual: float):
        self.potential = potential
        self.beta = beta
        self.order = order
        self.closure = closure
        self.solution = solution
        self.tail = tail
        self.t_end = t_end
        self.mass_residual = mass_residual

    def _check_time(self, t: float) -> float:
        if t < -1e-12 or t > self.t_end * (1 + 1e-12) + 1e-12:
            raise ValueError(f"T_t source unavailable at requested time t={t} (solved on [0, {self.t_end}])")
        return min(max(float(t), 0.0), self.t_end)

    def at(self, t: float) -> MomentVector:
        t = self._check_time(t)
        active = self.solution(t) if self.solution is not None else self.tail[:self.order + 1]
        return MomentVector(np.concatenate([np.real(active), self.tail[self.order + 1:]]))

    def t_coeffs(self, t: float) -> np.ndarray:
        return t_polynomial(self.potential, self.at(t))

    def t_derivative_coeffs(self, t: float, order: int) -> np.ndarray:
        return P.polyder(self.t_coeffs(t), order) if order else self.t_coeffs(t)

    def t_eval(self, t: float, z, order: int = 0):
        """T_t^(order)(z) with T_t(z) = ∫(V'(x) − V'(z))/(x − z) ρ_t(x) dx"""
        return P.polyval(z, self.t_derivative_coeffs(t, order))


def solve_moments(potential: Potential, beta: float, initial, t_end: float, order: int = 12,
                  closure: Closure = Closure.FREEZE, rtol: float = 1e-10, atol: float = 1e-12,
                  method: str = 'RK45') -> MomentTrajectory:
    """Integrate the moment hierarchy up to order K from a density or MomentVector"""
    margin = closure_margin(potential)
    if order < potential.degree - 2:
        raise ValueError(f"moment order below 2n-2 (need {potential.degree - 2}, have {order})")
    if isinstance(initial, MomentVector):
        start = initial
        if start.K < order + margin:
            raise ValueError(f"closure underflow: moment m_{order + margin} needed, have up to m_{start.K}")
    else:
        start = initial.moments(order + margin)
    full0 = np.array(start.m[:order + margin + 1], dtype=float)
    tail = full0.copy()
    frozen_top = np.arange(order + 1) + margin > order if closure is Closure.ZERO_DERIVATIVE else None

    def rhs(t, active):
        full = np.concatenate([active, tail[order + 1:]])
        rate = moment_rhs(MomentVector(full), potential, beta, order)
        if frozen_top is not None:
            rate[frozen_top] = 0.0
        return rate

    if t_end <= 0:
        return MomentTrajectory(potential, beta, order, closure, None, tail, 0.0,
                                abs(full0[0] - 1.0))
    result = integrate.solve_ivp(rhs, (0.0, t_end), full0[:order + 1], method=method,
                                 rtol=rtol, atol=atol, dense_output=True)
    if not result.success:
        raise NumericalError(f"moment solve failed: {result.message}", {'t_end': t_end})
    mass = float(np.max(np.abs(result.y[0] - 1.0)))
    growth = float(np.max(np.abs(result.y[-1])) / max(abs(full0[order]), 1e-300))
    logger.debug(f"Moment solve K={order} closure={closure.value}: {len(result.t)} steps, "
                 f"mass residual {mass:.3g}, top moment growth {growth:.3g}")
    return MomentTrajectory(potential, beta, order, closure, result.sol, tail, float(t_end), mass)


class CharacteristicSystem:
    """Right-hand side for a vector of complex characteristics.

    Rows of the state are z, c = −U, log A and, depending on `order`, the first
    variations (δz, δc) and second variations (δ²z, δ²c) with respect to the
    launch point. Rows whose Im z dropped below zero are frozen.
    """

    def __init__(self, potential: Potential, beta: float, moments: MomentTrajectory, order: int = 2):
        self.beta = beta
        self.moments = moments
        self.order = order
        self.rows = 3 + 2 * order
        self._v = [potential.derivative_coeffs(k) for k in range(1, 5)]

    def initial_state(self, w: np.ndarray, u0: Callable) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        state = [w, -u0(w, 0), np.zeros_like(w)]
        if self.order >= 1:
            state += [np.ones_like(w), -u0(w, 1)]
        if self.order >= 2:
            state += [np.zeros_like(w), -u0(w, 2)]
        return np.concatenate(state)

    def __call__(self, t, y):
        y = y.reshape(self.rows, -1)
        z, c = y[0], y[1]
        v1, v2, v3, v4 = (P.polyval(z, coeffs) for coeffs in self._v)
        t_coeffs = self.moments.t_coeffs(t)
        dt1 = P.polyval(z, P.polyder(t_coeffs, 1))
        out = np.empty_like(y)
        out[0] = 0.5 * self.beta * c - v1
        out[1] = v2 * c - dt1
        out[2] = v2
        if self.order >= 1:
            dz, dc = y[3], y[4]
            dt2 = P.polyval(z, P.polyder(t_coeffs, 2))
            out[3] = 0.5 * self.beta * dc - v2 * dz
            out[4] = v3 * c * dz + v2 * dc - dt2 * dz
        if self.order >= 2:
            d2z, d2c = y[5], y[6]
            dt3 = P.polyval(z, P.polyder(t_coeffs, 3))
            out[5] = 0.5 * self.beta * d2c - v3 * dz ** 2 - v2 * d2z
            out[6] = (v4 * c * dz ** 2 + 2 * v3 * dz * dc + v3 * c * d2z + v2 * d2c
                      - dt3 * dz ** 2 - dt2 * d2z)
        out[:, z.imag < 0] = 0.0
        return out.ravel()


def _u0(initial) -> Callable:
    return lambda w, order: initial.stieltjes(w, order)


def harmonic_characteristic(z0, t, beta: float, u0):
    """Z_t(z0) = z0 e^{−t} − (β/2) U₀(z0) sinh t for V = x²/2"""
    return z0 * np.exp(-t) - 0.5 * beta * u0 * np.sinh(t)


def semi_ellipse(x, t, beta: float):
    """Image of x + i0 under the harmonic equilibrium flow: x cosh t − i√(β − x²) sinh t.

    It lies in the lower half plane, where these characteristics are killed.
    """
    x = np.asarray(x, dtype=float)
    return x * np.cosh(t) - 1j * np.sqrt(np.clip(beta - x ** 2, 0.0, None)) * np.sinh(t)


def characteristic_flow(z0: complex, t_end: float, initial, potential: Potential, beta: float,
                        moments: MomentTrajectory, times: Optional[Sequence[float]] = None,
                        rtol: float = 1e-10, atol: float = 1e-12, method: str = 'RK45') -> List[CharState]:
    """Path of a single characteristic from z0 ∈ Π̄₊, stopped when Im z crosses below zero"""
    if np.imag(z0) < 0:
        raise ValueError("Characteristics start in the closed upper half plane")
    moments._check_time(t_end)
    system = CharacteristicSystem(potential, beta, moments, order=0)
    y0 = system.initial_state(np.array([z0]), _u0(initial))
    times = np.linspace(0.0, t_end, 11) if times is None else np.asarray(times, dtype=float)

    def crossed(t, y):
        return y[0].imag
    crossed.terminal = True
    crossed.direction = -1

    result = integrate.solve_ivp(system, (0.0, t_end), y0, method=method, rtol=rtol, atol=atol,
                                 dense_output=True, events=crossed if np.imag(z0) > 0 else None)
    if result.status < 0:
        raise NumericalError(f"characteristic solve failed: {result.message}", {'z0': z0})
    kill_time = float(result.t_events[0][0]) if result.status == 1 else None
    if kill_time is not None:
        logger.debug(f"Characteristic from {z0} killed at t={kill_time:.6g}")
    path = []
    for t in times:
        alive = kill_time is None or t < kill_time
        state = result.sol(t if alive else kill_time)
        z, c, log_a = state
        zdot = system(t, state)[0] if alive else 0.0
        path.append(CharState(float(t), complex(z), complex(zdot), complex(c), complex(log_a),
                              alive, kill_time))
    return path


def launch_grid(initial, settings: HydroSettings) -> np.ndarray:
    """Tensor grid in Π₊: real points over `real_extent` times the support, log-spaced heights"""
    a, b = initial.support
    centre, half = 0.5 * (a + b), 0.5 * settings.real_extent * (b - a)
    xs = np.linspace(centre - half, centre + half, settings.n_real)
    ys = np.geomspace(settings.imag_min, settings.imag_max, settings.n_imag)
    return (xs[None, :] + 1j * ys[:, None]).ravel()


class FanSolution:
    """Dense fan state assembled from chunks of launch points solved independently"""

    def __init__(self, pieces: List[Tuple[np.ndarray, Callable]], size: int, rows: int = 7):
        self.pieces = pieces
        self.size = size
        self.rows = rows

    def __call__(self, t) -> np.ndarray:
        out = np.empty((self.rows, self.size), dtype=complex)
        for indices, solution in self.pieces:
            out[:, indices] = solution(t).reshape(self.rows, -1)
        return out.ravel()


def _fan_chunk(job) -> Tuple[Callable, int]:
    potential, beta, initial, moments, launch, t_end, settings = job
    system = CharacteristicSystem(potential, beta, moments, order=2)
    y0 = system.initial_state(launch, _u0(initial))
    result = integrate.solve_ivp(system, (0.0, t_end), y0, method=settings.method,
                                 rtol=settings.rtol, atol=settings.atol, dense_output=True)
    if not result.success:
        raise NumericalError(f"fan solve failed: {result.message}",
                             {'t_end': t_end, 'imag_launch': float(np.min(launch.imag))})
    return result.sol, len(result.t)


def solve_hydro(potential: Potential, beta: float, initial, t_end: float,
                settings: Optional[HydroSettings] = None,
                times: Optional[Sequence[float]] = None, workers: Optional[int] = None) -> HydroField:
    """Moment solve plus the characteristic fan launched from a grid in Π₊.

    Each launch height is integrated on its own, so rows near the real axis do
    not set the step size for the rest of the fan.
    """
    settings = settings or HydroSettings()
    moments = solve_moments(potential, beta, initial, t_end, settings.order, settings.closure,
                            settings.rtol, settings.atol, settings.method)
    launch = launch_grid(initial, settings)
    times = np.unique(np.concatenate([[0.0, t_end], np.asarray([] if times is None else times, dtype=float)]))
    field = HydroField(potential, beta, initial, moments, launch, times, None,
                       rtol=settings.rtol, atol=settings.atol, method=settings.method,
                       density_eps=settings.density_eps)
    if t_end > 0:
        levels = chunked(np.arange(len(launch)), settings.n_imag)
        jobs = [(potential, beta, initial, moments, launch[idx], t_end, settings) for idx in levels]
        results = map_chunks(_fan_chunk, jobs, 1 if workers is None else workers)
        field.solution = FanSolution([(idx, sol) for idx, (sol, _) in zip(levels, results)], len(launch))
        logger.info(f"Fan of {len(launch)} characteristics solved to t={t_end} in {len(levels)} chunks, "
                    f"{max(steps for _, steps in results)} steps at most")
    for t in times:
        field.kill_counts[float(t)] = int(np.sum(~snapshot(field, t).alive))
        logger.debug(f"t={t:.4g}: {field.kill_counts[float(t)]} characteristics killed")
    return field


def snapshot(field: HydroField, t: float) -> FanSnapshot:
    if t < 0 or t > field.t_end * (1 + 1e-12) + 1e-12:
        raise ValueError(f"t={t} outside the solved range [0, {field.t_end}]")
    if field.solution is None or t == 0:
        system = CharacteristicSystem(field.potential, field.beta, field.moments, order=2)
        y = system.initial_state(field.launch, _u0(field.initial))
    else:
        y = field.solution(min(t, field.t_end))
    y = y.reshape(7, -1)
    return FanSnapshot(float(t), y[0], y[1], y[2], y[3], y[4], y[0].imag >= 0)


def flow_points(field: HydroField, w, t: float, order: int = 2) -> np.ndarray:
    """Integrate characteristics launched at w to time t; rows as in CharacteristicSystem"""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    system = CharacteristicSystem(field.potential, field.beta, field.moments, order=order)
    y0 = system.initial_state(w, _u0(field.initial))
    if t == 0:
        return y0.reshape(system.rows, -1)
    result = integrate.solve_ivp(system, (0.0, t), y0, method=field.method,
                                 rtol=field.rtol, atol=field.atol)
    if not result.success:
        raise NumericalError(f"characteristic solve failed: {result.message}", {'t': t})
    return result.y[:, -1].reshape(system.rows, -1)


def _interpolator(field: HydroField, t: float) -> LinearNDInterpolator:
    key = float(t)
    if key not in field._interpolators:
        snap = snapshot(field, t)
        alive = snap.alive
        points = np.column_stack([snap.z.real[alive], snap.z.imag[alive]])
        values = np.column_stack([field.launch[alive], snap.u[alive]])
        field._interpolators[key] = LinearNDInterpolator(points, values)
    return field._interpolators[key]


def _upper(w: np.ndarray) -> np.ndarray:
    return w.real + 1j * np.where(w.imag > 0, w.imag, 0.0)


def pull_back(field: HydroField, t: float, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Launch points w with Z_t(w) = z, the fan state at t and the interpolated U.

    The pre-image of z is interpolated from the live fan and polished by Newton
    iteration on Z_t(w) = z using the first variation δz.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    guess = _interpolator(field, t)(z_arr.real, z_arr.imag)
    if np.any(~np.isfinite(guess)):
        outside = z_arr[~np.all(np.isfinite(guess), axis=-1)]
        raise NumericalError("refine fan", {'t': t, 'outside_hull': [complex(v) for v in outside[:5]]})
    w = _upper(guess[:, 0])

    scale = 1.0 + np.abs(z_arr)
    for iteration in range(NEWTON_ITERATIONS):
        state = flow_points(field, w, t, order=1)
        miss = state[0] - z_arr
        if np.all(np.abs(miss) <= 1e-12 * scale):
            break
        w = _upper(w - miss / state[3])
    else:
        worst = float(np.max(np.abs(miss) / scale))
        if worst > 1e-9:
            raise NumericalError("refine fan", {'t': t, 'newton_residual': worst})
    logger.debug(f"t={t}: Newton converged after {iteration} iteration(s)")
    return w, flow_points(field, w, t), guess[:, 1]


def u_derivatives(field: HydroField, t: float, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """U_t, U'_t, U''_t at z and the interpolation error estimate"""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if t == 0:
        u0 = _u0(field.initial)
        return u0(z_arr, 0), u0(z_arr, 1), u0(z_arr, 2), np.zeros(z_arr.shape)
    _, state, u_interpolated = pull_back(field, t, z_arr)
    _, c, _, dz, dc, d2z, d2c = state
    u = -c
    u1 = -dc / dz
    u2 = -(d2c * dz - dc * d2z) / dz ** 3
    return u, u1, u2, np.abs(u_interpolated - u)


def u_field(field: HydroField, t: float, z):
    """U_t(z) and an error estimate from the fan interpolation"""
    u, _, _, error = u_derivatives(field, t, z)
    if np.ndim(z) == 0:
        return complex(u[0]), float(error[0])
    return u.reshape(np.shape(z)), error.reshape(np.shape(z))


def density(field: HydroField, t: float, x, eps: Optional[float] = None) -> np.ndarray:
    """ρ_t(x) by Plemelj from two levels above the axis"""
    eps = field.density_eps[0] if eps is None else eps
    return plemelj_density(lambda z: u_derivatives(field, t, z)[0].reshape(np.shape(z)), x, eps=eps)


def herglotz_violations(field: HydroField, t: float) -> int:
    """Live fan points above the axis carrying Im U <= 0"""
    snap = snapshot(field, t)
    upper = snap.alive & (snap.z.imag > 0)
    return int(np.sum(snap.u[upper].imag <= 0))


def burgers_residual(field: HydroField, t: float, z, h: float = 1e-3):
    """∂_t U − ∂_z((β/4)U² + V'U + T) with a central difference in time"""
    if t - h < 0 or t + h > field.t_end:
        raise ValueError("burgers_residual needs [t − h, t + h] inside the solved range")
    forward = u_derivatives(field, t + h, z)[0]
    backward = u_derivatives(field, t - h, z)[0]
    u, u1, _, _ = u_derivatives(field, t, z)
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    v1 = P.polyval(z_arr, field.potential.derivative_coeffs(1))
    v2 = P.polyval(z_arr, field.potential.derivative_coeffs(2))
    flux = 0.5 * field.beta * u * u1 + v2 * u + v1 * u1 + field.moments.t_eval(t, z_arr, 1)
    residual = (forward - backward) / (2.0 * h) - flux
    return complex(residual[0]) if np.ndim(z) == 0 else residual


def moment_consistency(field: HydroField, t: float, order: int = 4,
                       xs: Optional[np.ndarray] = None) -> np.ndarray:
    """|∫ x^k ρ_t dx − m_k(t)| for k ≤ order, with ρ_t reconstructed by Plemelj"""
    moments = field.moments.at(t)
    if xs is None:
        initial_moments = field.moments.at(0.0)
        ratio = np.sqrt(max(moments[2] - moments[1] ** 2, 0.0)
                        / max(initial_moments[2] - initial_moments[1] ** 2, 1e-300))
        a, b = field.initial.support
        centre, half = moments[1], 0.5 * (b - a) * 1.1 * max(ratio, 1.0)
        xs = np.linspace(centre - half, centre + half, 801)
    rho = density(field, t, xs)
    reconstructed = np.array([integrate.simpson(rho * xs ** k, x=xs) for k in range(order + 1)])
    return np.abs(reconstructed - moments.m[:order + 1])
