import logging
from dataclasses import replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, linalg

from ..exceptions import ConfigError, NumericalError
from ..models.particles import (CovarianceEstimate, ParticleState, RunningMoments, SeedRecord,
                                SimulationResult)
from ..models.potential import Potential, PotentialFamily
from ..models.scenario import InitialKind, Scenario, StartMode
from .scenario_service import initial_density, reference_density
from .utils import chunked, default_workers, jackknife, map_chunks, sample_covariance

logger = logging.getLogger(__name__)

# Stream tags under one (seed, replica) key
_STEP_STREAM = 0
_BRIDGE_STREAM = 1
_START_STREAM = 2


def _generator(entropy: int, replica: int, *key: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=[int(entropy), int(replica)],
                                      spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def start_generator(entropy: int, replica: int) -> np.random.Generator:
    return _generator(entropy, replica, _START_STREAM)


class LogGasSimulator:
    """Euler–Maruyama integrator for the N-particle log-gas

        dλⁱ = N^{-1/2} dWⁱ − V'(λⁱ) dt + (β/2N) Σ_{j≠i} dt/(λⁱ − λʲ)

    Many replicas are stepped together as rows of an (R, N) array. A row whose
    candidate breaks the ordering is redone alone in two half steps whose
    increments are drawn from the Brownian bridge of the rejected one.
    """

    def __init__(self, potential: Potential, beta: float, dt: float, dt_min: float = 1e-10,
                 radius: float = 10.0, noise: bool = True, block_steps: int = 256,
                 entropy: int = 0):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        self.potential = potential
        self.beta = float(beta)
        self.dt = float(dt)
        self.dt_min = float(dt_min)
        self.radius = float(radius)
        self.noise = noise
        self.block_steps = int(block_steps)
        self.entropy = int(entropy)
        self._vprime = potential.derivative_coeffs(1)
        self._blocks: Dict[int, Tuple[int, np.ndarray]] = {}

    def drift(self, lambdas: np.ndarray) -> np.ndarray:
        """Deterministic part of the increment per unit time, for (N,) or (R, N) input"""
        x = np.atleast_2d(lambdas)
        n = x.shape[-1]
        gaps = x[..., :, None] - x[..., None, :]
        idx = np.arange(n)
        gaps[..., idx, idx] = np.inf
        repulsion = np.sum(1.0 / gaps, axis=-1) * (self.beta / (2.0 * n))
        result = repulsion - P.polyval(x, self._vprime)
        return result if np.ndim(lambdas) == 2 else result[0]

    def _normals(self, replica: int, step: int, n: int) -> np.ndarray:
        block, offset = divmod(step, self.block_steps)
        cached = self._blocks.get(replica)
        if cached is None or cached[0] != block:
            rng = _generator(self.entropy, replica, _STEP_STREAM, block)
            cached = (block, rng.standard_normal((self.block_steps, n)))
            self._blocks[replica] = cached
        return cached[1][offset]

    def increments(self, replicas: Sequence[int], step: int, n: int, dt: float) -> np.ndarray:
        if not self.noise:
            return np.zeros((len(replicas), n))
        return np.sqrt(dt) * np.array([self._normals(r, step, n) for r in replicas])

    def _accepts(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all(np.isfinite(x), axis=-1) & np.all(np.diff(x, axis=-1) > 0, axis=-1)

    def _refine(self, x: np.ndarray, dw: np.ndarray, dt: float, replica: int, step: int,
                depth: int = 0, index: int = 0) -> Tuple[np.ndarray, int]:
        """Advance one row by dt with Brownian increment dw, halving on rejection"""
        n = len(x)
        candidate = x + self.drift(x) * dt + dw / np.sqrt(n)
        if self._accepts(candidate)[0]:
            return candidate, 0
        half = dt / 2.0
        if half < self.dt_min:
            raise NumericalError("collision unresolved", {
                'replica': replica, 'step': step, 'dt': half, 'depth': depth,
                'min_gap': float(np.min(np.diff(x))) if n > 1 else float('nan')})
        if self.noise:
            xi = _generator(self.entropy, replica, _BRIDGE_STREAM, step, depth, index).standard_normal(n)
            first = dw / 2.0 + np.sqrt(dt / 4.0) * xi
        else:
            first = np.zeros(n)
        mid, left = self._refine(x, first, half, replica, step, depth + 1, 2 * index)
        end, right = self._refine(mid, dw - first, half, replica, step, depth + 1, 2 * index + 1)
        return end, 1 + left + right

    def advance(self, lambdas: np.ndarray, replicas: Sequence[int], step: int) -> Tuple[np.ndarray, np.ndarray]:
        """One step of size dt for every row; returns new rows and per-row halvings"""
        x = np.atleast_2d(lambdas)
        dw = self.increments(replicas, step, x.shape[1], self.dt)
        candidate = x + self.drift(x) * self.dt + dw / np.sqrt(x.shape[1])
        rejections = np.zeros(len(x), dtype=int)
        for row in np.flatnonzero(~self._accepts(candidate)):
            logger.debug(f"Replica {replicas[row]} step {step}: ordering broken, refining")
            candidate[row], rejections[row] = self._refine(x[row], dw[row], self.dt, replicas[row], step)
        self._check_radius(candidate, replicas, step)
        return candidate, rejections

    def _check_radius(self, x: np.ndarray, replicas: Sequence[int], step: int) -> None:
        extent = np.max(np.abs(x), axis=-1)
        if np.any(extent > self.radius):
            row = int(np.argmax(extent))
            raise NumericalError("large-deviation radius exceeded", {
                'replica': replicas[row], 'step': step, 'max_abs': float(extent[row]),
                'radius': self.radius})

    def evolve(self, lambdas: np.ndarray, replicas: Sequence[int], step: int,
               steps: int) -> Tuple[np.ndarray, np.ndarray]:
        """Advance rows from global step index `step` by `steps` steps"""
        x = np.array(np.atleast_2d(lambdas), dtype=float)
        replicas = list(replicas)
        total = np.zeros(len(x), dtype=int)
        for k in range(step, step + steps):
            x, rejections = self.advance(x, replicas, k)
            total += rejections
        return x, total

    def step(self, state: ParticleState) -> ParticleState:
        if not state.is_ordered():
            raise ValueError("Particle state must be strictly ordered")
        x, rejections = self.advance(state.lambdas[None, :], [state.seed.replica], state.seed.step)
        return ParticleState(x[0], state.t + self.dt, state.seed.advanced(),
                             state.rejections + int(rejections[0]))


def step(state: ParticleState, dt: float, p: Potential, beta: float, noise: bool = True,
         dt_min: float = 1e-10, radius: float = np.inf) -> ParticleState:
    """Single Euler–Maruyama step with the stream given by state.seed"""
    simulator = LogGasSimulator(p, beta, dt, dt_min=dt_min, radius=radius, noise=noise,
                                entropy=state.seed.entropy)
    return simulator.step(state)


def _inverse_cdf(density, n_grid: int = 4097) -> Callable:
    """Quantile function of a density on its support.

    The substitution x = a + (b−a)(1−cos φ)/2 removes the square-root edge
    behaviour before cumulative trapezoid integration.
    """
    a, b = density.support
    phi = np.linspace(0.0, np.pi, n_grid)
    xs = a + (b - a) * (1.0 - np.cos(phi)) / 2.0
    integrand = density.density(xs) * (b - a) * np.sin(phi) / 2.0
    cdf = integrate.cumulative_trapezoid(integrand, phi, initial=0.0)
    if cdf[-1] <= 0:
        raise ValueError("Density has no mass on its support")
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return lambda u: np.interp(u, cdf[keep], xs[keep])


def quantile_positions(density, n: int) -> np.ndarray:
    """Deterministic placement λⁱ = F⁻¹((i − ½)/N)"""
    return _inverse_cdf(density)((np.arange(1, n + 1) - 0.5) / n)


def iid_positions(density, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(_inverse_cdf(density)(rng.uniform(size=n)))


def equilibrium_sample(beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draw from the harmonic finite-N equilibrium ∝ |Δ(λ)|^β exp(−N Σλ²).

    Eigenvalues μ of the tridiagonal β-Hermite matrix have density
    ∝ |Δ(μ)|^β exp(−Σμ²/2); λ = μ/√(2N).
    """
    diagonal = rng.normal(0.0, np.sqrt(2.0), size=n) / np.sqrt(2.0)
    dof = beta * np.arange(n - 1, 0, -1)
    if n == 1:
        return diagonal / np.sqrt(2.0)
    off_diagonal = np.sqrt(rng.chisquare(dof)) / np.sqrt(2.0)
    mu = linalg.eigvalsh_tridiagonal(diagonal, off_diagonal)
    return np.sort(mu) / np.sqrt(2.0 * n)


def initial_positions(scenario: Scenario, replica: int, density=None) -> np.ndarray:
    """Starting configuration of one replica according to scenario.sde.start"""
    sde = scenario.sde
    n = sde.n_particles
    if sde.start is StartMode.EQUILIBRIUM:
        if scenario.potential.family is not PotentialFamily.HARMONIC:
            raise ConfigError("equilibrium start requires the harmonic potential; use quantile with burn_in")
        sample = equilibrium_sample(scenario.beta, n, start_generator(scenario.seed, replica))
        if scenario.initial.kind is InitialKind.SCALED_SEMICIRCLE:
            sample = sample * scenario.initial.s0
        return sample
    density = density if density is not None else initial_density(scenario)
    if sde.start is StartMode.IID:
        return iid_positions(density, n, start_generator(scenario.seed, replica))
    return quantile_positions(density, n)


def empirical_stieltjes(state, z) -> complex:
    """U^N(z) = (1/N) Σ 1/(λⁱ − z)"""
    lambdas = state.lambdas if isinstance(state, ParticleState) else np.asarray(state)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag == 0):
        raise ValueError("empirical_stieltjes needs Im z != 0")
    values = np.mean(1.0 / (lambdas[..., None] - z_arr.ravel()), axis=-2)
    values = values.reshape(lambdas.shape[:-1] + z_arr.shape)
    return complex(values) if values.ndim == 0 else values


def reference_integral(f: Callable, reference) -> float:
    try:
        value = reference.integrate(f)
    except Exception as exc:
        raise NumericalError(f"quadrature of the reference pairing failed: {exc}") from exc
    if not np.isfinite(value):
        raise NumericalError("quadrature of the reference pairing failed", {'value': value})
    return float(value)


def pair_fluctuation(state, f: Callable, reference=None, integral: Optional[float] = None):
    """⟨Yᴺ, f⟩ = Σ f(λⁱ) − N ∫ f ρ; rows of a 2-D array are paired independently"""
    lambdas = state.lambdas if isinstance(state, ParticleState) else np.asarray(state)
    if integral is None:
        integral = reference_integral(f, reference) if reference is not None else 0.0
    n = lambdas.shape[-1]
    return n * (np.mean(f(lambdas), axis=-1) - integral)


def generator_drift(potential: Potential, beta: float, lambdas: np.ndarray, f_prime: Callable,
                    f_second: Optional[Callable] = None) -> float:
    """Expected rate of change of Σ f(λⁱ).

    Σ f'(λⁱ)(−V'(λⁱ)) + (β/4N) Σ_{i≠j} (f'(λⁱ) − f'(λʲ))/(λⁱ − λʲ), plus the Itô
    term (1/2N) Σ f''(λⁱ) when f_second is given.
    """
    x = np.asarray(lambdas, dtype=float)
    n = len(x)
    fp = f_prime(x)
    gaps = x[:, None] - x[None, :]
    np.fill_diagonal(gaps, 1.0)
    quotients = (fp[:, None] - fp[None, :]) / gaps
    np.fill_diagonal(quotients, 0.0)
    rate = -np.sum(fp * P.polyval(x, potential.derivative_coeffs(1))) + beta / (4.0 * n) * np.sum(quotients)
    if f_second is not None:
        rate += np.sum(f_second(x)) / (2.0 * n)
    return float(rate)


def linear(x):
    return x


def quadratic(x):
    return x ** 2


TEST_FUNCTIONS = {'x': linear, 'x2': quadratic}


def _simulator(scenario: Scenario, noise: bool = True) -> LogGasSimulator:
    sde = scenario.sde
    return LogGasSimulator(scenario.potential, scenario.beta, sde.dt, dt_min=sde.dt_min,
                           radius=sde.radius, noise=noise, block_steps=sde.block_steps,
                           entropy=scenario.seed)


def _steps(t: float, dt: float) -> int:
    steps = int(round(t / dt))
    if abs(steps * dt - t) > 1e-9 * max(1.0, abs(t)):
        logger.warning(f"Time {t} is not a multiple of dt={dt}; using {steps * dt}")
    return steps


def _starts(scenario: Scenario, replicas: Sequence[int]) -> np.ndarray:
    density = None if scenario.sde.start is StartMode.EQUILIBRIUM else initial_density(scenario)
    return np.array([initial_positions(scenario, r, density) for r in replicas])


def _covariance_chunk(args) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    scenario, replicas, f, g, t1, t2 = args
    simulator = _simulator(scenario)
    x = _starts(scenario, replicas)
    checkpoints = sorted({_steps(scenario.sde.burn_in + t, scenario.sde.dt) for t in (t1, t2)})
    snapshots = {}
    position, rejections = 0, np.zeros(len(replicas), dtype=int)
    for target in checkpoints:
        x, count = simulator.evolve(x, replicas, position, target - position)
        rejections += count
        position = target
        snapshots[target] = x.copy()
    first = snapshots[_steps(scenario.sde.burn_in + t1, scenario.sde.dt)]
    second = snapshots[_steps(scenario.sde.burn_in + t2, scenario.sde.dt)]
    return np.sum(f(first), axis=-1), np.sum(g(second), axis=-1), rejections


def mc_covariance(scenario: Scenario, f: Callable, g: Callable, t1: float, t2: float,
                  replicas: Optional[int] = None, workers: Optional[int] = None) -> CovarianceEstimate:
    """Cov(⟨Yᴺ_{t1}, f⟩, ⟨Yᴺ_{t2}, g⟩) over independent replicas with a jackknife error.

    Times are measured after the configured burn-in. f and g must be picklable
    (module-level) when more than one worker is used.
    """
    replicas = scenario.sde.replicas if replicas is None else replicas
    if replicas < 2:
        raise ValueError("mc_covariance needs at least two replicas")
    workers = default_workers() if workers is None else max(1, workers)
    indices = list(range(replicas))
    jobs = [(scenario, [int(r) for r in chunk], f, g, t1, t2)
            for chunk in chunked(indices, workers * 4)]
    logger.info(f"Simulating {replicas} replicas of N={scenario.sde.n_particles} on {workers} worker(s)")
    results = map_chunks(_covariance_chunk, jobs, workers)

    sums_f = np.concatenate([r[0] for r in results])
    sums_g = np.concatenate([r[1] for r in results])
    rejections = int(sum(int(np.sum(r[2])) for r in results))
    bad = np.flatnonzero(~(np.isfinite(sums_f) & np.isfinite(sums_g)))
    if len(bad):
        raise NumericalError(f"non-finite sample at replica {int(bad[0])}", {'replica': int(bad[0])})

    n = scenario.sde.n_particles
    shift_f = _reference_shift(scenario, f, t1)
    shift_g = _reference_shift(scenario, g, t2)
    pairs = np.column_stack([sums_f - n * shift_f, sums_g - n * shift_g])
    estimate, error = jackknife(pairs, sample_covariance)
    if rejections:
        logger.info(f"{rejections} step halvings across all replicas")
    return CovarianceEstimate(estimate, error, replicas, t1, t2,
                              mean_f=float(np.mean(pairs[:, 0])), mean_g=float(np.mean(pairs[:, 1])),
                              rejections=rejections)


def _reference_shift(scenario: Scenario, f: Callable, t: float) -> float:
    reference = reference_density(scenario, scenario.sde.burn_in + t)
    if reference is None:
        return 0.0
    return reference_integral(f, reference)


def _trajectory_chunk(args):
    scenario, replicas, times, noise = args
    simulator = _simulator(scenario, noise=noise)
    x = _starts(scenario, replicas)
    burn = _steps(scenario.sde.burn_in, scenario.sde.dt)
    x, rejections = simulator.evolve(x, replicas, 0, burn)
    position = burn
    rows = []
    linear_stats, square_stats = RunningMoments(), RunningMoments()
    for t in times:
        target = burn + _steps(t, scenario.sde.dt)
        x, count = simulator.evolve(x, replicas, position, target - position)
        rejections += count
        position = target
        for row, replica in enumerate(replicas):
            rows.extend((replica, t, i, value) for i, value in enumerate(x[row]))
    for row in range(len(replicas)):
        linear_stats.add(float(np.sum(x[row])))
        square_stats.add(float(np.sum(x[row] ** 2)))
    return rows, linear_stats, square_stats, int(np.sum(rejections))


def simulate_trajectories(scenario: Scenario, times: Optional[Iterable[float]] = None,
                          replicas: Optional[int] = None, workers: Optional[int] = None,
                          noise: bool = True) -> SimulationResult:
    """Trajectory dump rows (replica, t, i, λ) and running moments at the last time"""
    times = sorted(scenario.times if times is None else times)
    replicas = scenario.sde.replicas if replicas is None else replicas
    workers = default_workers() if workers is None else max(1, workers)
    jobs = [(scenario, [int(r) for r in chunk], times, noise)
            for chunk in chunked(list(range(replicas)), workers * 4)]
    results = map_chunks(_trajectory_chunk, jobs, workers)
    rows: List[tuple] = []
    moments = {'sum': RunningMoments(), 'sum_sq': RunningMoments()}
    rejections = 0
    for chunk_rows, linear_stats, square_stats, count in results:
        rows.extend(chunk_rows)
        moments['sum'] = moments['sum'].merge(linear_stats)
        moments['sum_sq'] = moments['sum_sq'].merge(square_stats)
        rejections += count
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return SimulationResult(rows=rows, moments=moments, rejections=rejections,
                            replicas=replicas, times=tuple(times))


def harmonic_identities(beta: float, n: int) -> Dict[str, float]:
    """Finite-N equilibrium values of Var(Σλ) and E[Σλ²] for V = x²/2"""
    return {'var_sum': 0.5, 'mean_sum_sq': 0.5 + beta * (n - 1) / 4.0}


def with_sde(scenario: Scenario, **changes) -> Scenario:
    return replace(scenario, sde=replace(scenario.sde, **changes))
