import logging
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize

from ..exceptions import NumericalError
from ..models.edge import EdgePoint, EdgeTrajectory, JumpReport, Side
from ..models.potential import Potential
from .hydro_service import MomentTrajectory

logger = logging.getLogger(__name__)

SCAN_POINTS = 256
REFINE_POINTS = 16
XTOL = 1e-10


class RealFlow:
    """Second-order real characteristics with their variational system.

    State rows are x, ẋ, δx, δẋ with
        ẍ = V''V' − (β/2) T'_t,   δẍ = [(V''V')' − (β/2) T''_t] δx.
    """

    def __init__(self, potential: Potential, beta: float, initial, moments: MomentTrajectory,
                 rtol: float = 1e-11, atol: float = 1e-13, method: str = 'RK45'):
        self.beta = beta
        self.initial = initial
        self.moments = moments
        self.rtol = rtol
        self.atol = atol
        self.method = method
        self._v = [potential.derivative_coeffs(k) for k in range(1, 4)]

    def _rhs(self, t, y):
        x, v, dx, dv = y.reshape(4, -1)
        v1, v2, v3 = (P.polyval(x, c) for c in self._v)
        t1 = self.moments.t_eval(t, x, 1)
        t2 = self.moments.t_eval(t, x, 2)
        return np.concatenate([v, v2 * v1 - 0.5 * self.beta * t1,
                               dv, (v3 * v1 + v2 * v2 - 0.5 * self.beta * t2) * dx])

    def initial_state(self, x0: np.ndarray, jacobian: bool = True) -> np.ndarray:
        a, b = self.initial.support
        if np.any((x0 > a) & (x0 < b)):
            raise ValueError("x0 must lie outside the initial support")
        u0 = np.real(self.initial.stieltjes(x0 + 0j, 0))
        v0 = -0.5 * self.beta * u0 - P.polyval(x0, self._v[0])
        if jacobian:
            u1 = np.real(self.initial.stieltjes(x0 + 0j, 1))
            dv0 = -0.5 * self.beta * u1 - P.polyval(x0, self._v[1])
            dx0 = np.ones_like(x0)
        else:
            dv0 = dx0 = np.zeros_like(x0)
        return np.concatenate([x0, v0, dx0, dv0])

    def run(self, x0, t: float, jacobian: bool = True) -> np.ndarray:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        y0 = self.initial_state(x0, jacobian)
        if t == 0:
            return y0.reshape(4, -1)
        result = integrate.solve_ivp(self._rhs, (0.0, t), y0, method=self.method,
                                     rtol=self.rtol, atol=self.atol)
        if not result.success:
            raise NumericalError(f"real characteristic solve failed: {result.message}", {'t': t})
        state = result.y[:, -1].reshape(4, -1)
        if jacobian and not np.all(np.isfinite(state[2])):
            raise NumericalError("non-finite Jacobian", {'t': t})
        return state


def real_characteristic_with_jacobian(flow: RealFlow, x0, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Z_t(x0) and ∂Z_t/∂x0 for real x0 outside the initial support"""
    state = flow.run(x0, t)
    if np.ndim(x0) == 0:
        return float(state[0, 0]), float(state[2, 0])
    return state[0], state[2]


def _scan_offsets(b0: float) -> np.ndarray:
    start = max(abs(b0), 1.0) * 1e-6
    return np.geomspace(start, 10.0 * (1.0 + abs(b0)), SCAN_POINTS)


def _refine_scan(offsets: np.ndarray, jacobian: np.ndarray, evaluate) -> Tuple[np.ndarray, np.ndarray]:
    """Resample once the scan intervals at and next to each sign change of Z'_t"""
    changes = np.flatnonzero((jacobian[:-1] <= 0) != (jacobian[1:] <= 0))
    if len(changes) == 0:
        return offsets, jacobian
    intervals = np.unique(np.clip(np.concatenate([changes - 1, changes, changes + 1]), 0, len(offsets) - 2))
    extra = np.concatenate([np.linspace(offsets[i], offsets[i + 1], REFINE_POINTS + 2)[1:-1] for i in intervals])
    merged = np.concatenate([offsets, extra])
    order = np.argsort(merged)
    logger.debug(f"Refined {len(intervals)} scan interval(s) around {len(changes)} sign change(s)")
    return merged[order], np.concatenate([jacobian, evaluate(extra)])[order]


def edge(flow: RealFlow, t: float, side: Side = Side.RIGHT) -> EdgePoint:
    """Outermost pre-image where Z'_t stops being positive, and its image.

    For the right edge this is sup{x0 > b0 : Z'_t(x0) <= 0}; the left edge mirrors it.
    Without a sign change the boundary case (b0, Z_t(b0)) is returned with a flag.
    """
    a0, b0 = flow.initial.support
    base = b0 if side is Side.RIGHT else a0
    sigma = side.orientation

    def jacobian_on(offsets):
        return real_characteristic_with_jacobian(flow, base + sigma * offsets, t)[1]

    offsets = _scan_offsets(base)
    offsets, jacobian = _refine_scan(offsets, jacobian_on(offsets), jacobian_on)
    xs = base + sigma * offsets
    nonpositive = np.flatnonzero(jacobian <= 0.0)

    if len(nonpositive) == 0:
        state = flow.run(base, t, jacobian=False)
        if t > 0:
            logger.warning(f"No sign change of Z'_t at t={t} on the {side.value} side; boundary case")
        return EdgePoint(t, side, base, float(state[0, 0]), boundary_case=True,
                         margin=float(np.min(jacobian)), speed=float(state[1, 0]))
    last = int(nonpositive[-1])
    if last == len(xs) - 1:
        raise NumericalError("Z'_t nonpositive at the far end of the scan", {'t': t, 'x0': float(xs[-1])})
    logger.debug(f"t={t}: bracket [{xs[last]:.12g}, {xs[last + 1]:.12g}] on the {side.value} side")

    def jacobian_at(x0):
        return real_characteristic_with_jacobian(flow, x0, t)[1]

    x_star = optimize.brentq(jacobian_at, xs[last], xs[last + 1], xtol=XTOL, rtol=4 * np.finfo(float).eps)
    state = flow.run(x_star, t)
    return EdgePoint(t, side, float(x_star), float(state[0, 0]), boundary_case=False,
                     margin=float(np.min(jacobian[last + 1:])), speed=float(state[1, 0]))


def track_support(flow: RealFlow, times: Iterable[float],
                  sides: Sequence[Side] = (Side.LEFT, Side.RIGHT)) -> EdgeTrajectory:
    """Sample the external support [a_t, b_t] at the given times"""
    times = np.asarray(sorted(times), dtype=float)
    columns = {side: [edge(flow, t, side) for t in times] for side in sides}
    nan = np.full(len(times), np.nan)

    def column(side, attribute):
        if side not in columns:
            return nan.copy()
        return np.array([getattr(point, attribute) for point in columns[side]])

    margins = np.nanmin(np.vstack([column(s, 'margin') for s in sides]), axis=0)
    flags = [any(columns[s][i].boundary_case for s in sides) for i in range(len(times))]
    trajectory = EdgeTrajectory(times, column(Side.LEFT, 'position'), column(Side.RIGHT, 'position'),
                                column(Side.LEFT, 'x_star'), column(Side.RIGHT, 'x_star'),
                                margins, flags, speed=column(Side.RIGHT, 'speed'))
    bad = np.flatnonzero(trajectory.a > trajectory.b)
    if len(bad):
        raise NumericalError("left edge beyond right edge", {'t': float(times[bad[0]])})
    return trajectory


def jump_report(trajectory: EdgeTrajectory, speed_bound: Optional[float] = None,
                tol: float = 1e-6) -> JumpReport:
    """Steps of b_t beyond C·Δ + tol; C defaults to 1.5 times the largest sampled edge speed"""
    b = trajectory.b
    if speed_bound is None:
        speeds = np.abs(trajectory.speed) if trajectory.speed is not None else np.zeros(1)
        speed_bound = 1.5 * float(np.nanmax(speeds)) if np.any(np.isfinite(speeds)) else 0.0
    steps = np.diff(b)
    allowance = speed_bound * np.diff(trajectory.times) + tol
    upward = [int(i) for i in np.flatnonzero(steps > allowance)]
    downward = [int(i) for i in np.flatnonzero(steps < -allowance)]
    for i in downward:
        logger.warning(f"Negative jump of b_t between t={trajectory.times[i]:.6g} and "
                       f"t={trajectory.times[i + 1]:.6g}: {steps[i]:.3g}")
    largest = float(np.max(steps[upward])) if upward else None
    return JumpReport(upward, downward, largest)


def scaling_edge(beta: float, s0: float, t) -> np.ndarray:
    """Closed-form right edge √β·s(t) of the harmonic scaling solution"""
    from .hydro_service import scaling_solution
    return np.sqrt(beta) * scaling_solution(s0, t)


def preimage_identity_residual(x_star: float, b0: float, t: float, beta: float) -> float:
    """x*/√(x*² − b0²) − 1 − (b0²/β)(coth t − 1) for the harmonic scaling solution"""
    return float(x_star / np.sqrt(x_star ** 2 - b0 ** 2) - 1.0 - (b0 ** 2 / beta) * (1.0 / np.tanh(t) - 1.0))
