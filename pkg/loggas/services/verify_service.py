import logging
import time
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..exceptions import LogGasError
from ..models.edge import Side
from ..models.potential import PotentialFamily
from ..models.report import CheckResult, CheckStatus, VerifyReport
from ..models.scenario import InitialKind, InitialSpec, Scenario, StartMode
from . import gmap_service, kernel_pde_service, kernel_service, ou_service, sde_service
from .hydro_service import (characteristic_flow, harmonic_characteristic, herglotz_violations, scaling_solution,
                            snapshot, solve_hydro, solve_moments, u_field)
from .potential_service import equilibrium_density, harmonic, quartic, scaled_semicircle
from .scenario_service import initial_density, reference_density
from .support_service import (RealFlow, jump_report, preimage_identity_residual, scaling_edge,
                              track_support)
from .transform_service import cut_equation_residual, hilbert_periodic, plemelj_density

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    'hydro': 1e-6,
    'mass': 1e-12,
    'edge': 1e-4,
    'preimage': 1e-8,
    'characteristics': 1e-9,
    'kernel_closed': 1e-12,
    'kernel_gmap': 1e-8,
    'kernel_pde': 1e-6,
    'equal_time_variance': 1e-8,
    'quartic': 1e-8,
    'short_distance': 0.02,
    'ou_drift': 1e-5,
    'ou_stationary': 1e-10,
    'transform': 1e-6,
    'cut_equation': 1e-6,
    'plemelj': 1e-4,
    'mean_moment': 1e-8,
    'standard_errors': 3.0,
}


def _tolerance(scenario: Scenario, key: str) -> float:
    return scenario.tolerance(key, DEFAULT_TOLERANCES[key])


def _measured(name: str, observed: float, tolerance: float, **details) -> CheckResult:
    status = CheckStatus.PASSED if np.isfinite(observed) and observed <= tolerance else CheckStatus.FAILED
    return CheckResult(name, status, float(observed), tolerance, details)


def _skipped(name: str, reason: str) -> CheckResult:
    return CheckResult(name, CheckStatus.SKIPPED, details={'reason': reason})


def _is_scaling(scenario: Scenario) -> bool:
    return (scenario.potential.family is PotentialFamily.HARMONIC
            and scenario.initial.kind is InitialKind.SCALED_SEMICIRCLE)


def _positive_times(scenario: Scenario) -> List[float]:
    return [t for t in sorted(set(scenario.times)) if t > 0]


class _Context:
    """Solutions shared by several checks, built on first use"""

    def __init__(self, scenario: Scenario, workers: Optional[int]):
        self.scenario = scenario
        self.workers = workers
        self.rng = np.random.default_rng(scenario.seed)
        self._field = None

    @property
    def field(self):
        if self._field is None:
            s = self.scenario
            self._field = solve_hydro(s.potential, s.beta, initial_density(s), s.horizon,
                                      s.hydro, _positive_times(s), workers=self.workers)
        return self._field


def _scaling_field(ctx: _Context, s0: float, times: Sequence[float]):
    s = ctx.scenario
    if _is_scaling(s) and s.initial.s0 == s0:
        return ctx.field
    settings = s.hydro
    if s0 < 1:
        # launch points of an expanding solution must cover its later support
        settings = replace(settings, real_extent=settings.real_extent * float(np.exp(s.horizon)))
    return solve_hydro(s.potential, s.beta, scaled_semicircle(s.beta, s0), s.horizon, settings, times,
                       workers=ctx.workers)


def _between_nodes(snap, n_real: int) -> np.ndarray:
    """Midpoints of neighbouring live fan points on the same launch height"""
    left = np.arange(len(snap.z) - 1)
    keep = (left % n_real != n_real - 1) & snap.alive[left] & snap.alive[left + 1]
    return 0.5 * (snap.z[left[keep]] + snap.z[left[keep] + 1])


def check_hydro_scaling(ctx: _Context, points: int = 50, scales: Sequence[float] = (0.5, 2.0)) -> CheckResult:
    """Fan values of U_t against the scaling solution for a contracting and an expanding start"""
    s = ctx.scenario
    if s.potential.family is not PotentialFamily.HARMONIC:
        return _skipped('hydro_scaling', 'no closed-form density for this scenario')
    times = _positive_times(s)[:5] or [s.horizon]
    per_time = -(-points // len(times))
    worst, compared = 0.0, {}
    for s0 in scales:
        field = _scaling_field(ctx, s0, times)
        compared[s0] = 0
        for t in times:
            reference = scaled_semicircle(s.beta, scaling_solution(s0, t))
            edge = reference.edge
            z = _between_nodes(snapshot(field, t), s.hydro.n_real)
            z = z[(np.abs(z.real) <= 1.5 * edge) & (z.imag >= 0.05 * edge) & (z.imag <= 2.0 * edge)]
            if len(z) == 0:
                continue
            z = ctx.rng.choice(z, size=min(per_time, len(z)), replace=False)
            values, _ = u_field(field, t, z)
            worst = max(worst, float(np.max(np.abs(values - reference.stieltjes(z)))))
            compared[s0] += len(z)
    observed = worst if all(count >= points for count in compared.values()) else float('nan')
    return _measured('hydro_scaling', observed, _tolerance(s, 'hydro'), compared=compared)


def check_mass(ctx: _Context) -> CheckResult:
    return _measured('mass_conservation', ctx.field.moments.mass_residual, _tolerance(ctx.scenario, 'mass'))


def check_herglotz(ctx: _Context) -> CheckResult:
    violations = {t: herglotz_violations(ctx.field, t) for t in ctx.field.times}
    total = sum(violations.values())
    return CheckResult('herglotz', CheckStatus.PASSED if total == 0 else CheckStatus.FAILED,
                       float(total), 0.0, {'kill_counts': ctx.field.kill_counts})


def check_support_edge(ctx: _Context) -> List[CheckResult]:
    s = ctx.scenario
    if not _is_scaling(s):
        return [_skipped('support_edge', 'closed-form edge known only for the harmonic scaling solution')]
    initial = initial_density(s)
    flow = RealFlow(s.potential, s.beta, initial, ctx.field.moments)
    times = _positive_times(s)
    trajectory = track_support(flow, times, (Side.RIGHT,))
    expected = scaling_edge(s.beta, s.initial.s0, trajectory.times)
    b0 = initial.support[1]
    identity = [abs(preimage_identity_residual(x, b0, t, s.beta))
                for x, t in zip(trajectory.b_star, trajectory.times)]
    jumps = jump_report(trajectory)
    return [
        _measured('support_edge', float(np.max(np.abs(trajectory.b - expected))), _tolerance(s, 'edge'),
                  times=list(trajectory.times), b=list(trajectory.b), expected=list(expected)),
        _measured('preimage_identity', float(np.max(identity)), _tolerance(s, 'preimage')),
        CheckResult('support_jumps', CheckStatus.PASSED if jumps.ok else CheckStatus.FAILED,
                    float(len(jumps.upward)), 0.0, {'downward': jumps.downward}),
    ]


def check_harmonic_characteristics(ctx: _Context, samples: int = 100, t_max: float = 2.0) -> CheckResult:
    """RK45 characteristics against Z_t(z0) = z0 e^{−t} − (β/2)U₀(z0) sinh t, `samples` live ones per β"""
    s = ctx.scenario
    if s.potential.family is not PotentialFamily.HARMONIC:
        return _skipped('harmonic_characteristics', 'closed form holds for the harmonic potential only')
    s0 = s.initial.s0 if s.initial.kind is InitialKind.SCALED_SEMICIRCLE else 1.0
    worst, compared = 0.0, {}
    for beta in (1.0, 2.0, 4.0):
        initial = scaled_semicircle(beta, s0)
        moments = solve_moments(s.potential, beta, initial, t_max, s.hydro.order, s.hydro.closure)
        compared[beta] = 0
        for _ in range(100 * samples):
            if compared[beta] == samples:
                break
            z0 = complex(ctx.rng.uniform(-2.0, 2.0), ctx.rng.uniform(0.5, 2.0))
            t = float(ctx.rng.uniform(0.05, t_max))
            expected = harmonic_characteristic(z0, t, beta, initial.stieltjes(z0))
            # Im Z_t decreases monotonically, so the end point decides survival
            if expected.imag < 0.05:
                continue
            end = characteristic_flow(z0, t, initial, s.potential, beta, moments, times=[t],
                                      rtol=1e-12, atol=1e-14)[-1]
            if not end.alive:
                continue
            worst = max(worst, abs(end.z - expected))
            compared[beta] += 1
    observed = worst if all(count == samples for count in compared.values()) else float('nan')
    return _measured('harmonic_characteristics', observed, _tolerance(s, 'characteristics'), compared=compared)


def _hermite_points(rng, count: int, spread: float = 1.2):
    x1 = rng.uniform(-spread, spread, count)
    x2 = rng.uniform(-spread, spread, count)
    return x1, x2


def check_hermite_triangle(ctx: _Context, samples: int = 100) -> CheckResult:
    """Sign-slot combination, hermite_g and the equal-time closed form agree pairwise"""
    x1, x2 = _hermite_points(ctx.rng, samples)
    dts = ctx.rng.uniform(0.05, 1.0, samples)
    worst = 0.0
    for a, b, dt in zip(x1, x2, dts):
        theta1, theta2 = kernel_service.hermite_angles(a), kernel_service.hermite_angles(b)
        combined = kernel_service.combine(kernel_service.hermite_lambda(dt, theta1, theta2),
                                          kernel_service.hermite_lambda(dt, theta1, theta2, '+', '-'))
        direct = kernel_service.hermite_g(dt, a, b)
        worst = max(worst, abs(combined - direct) / (1.0 + abs(direct)))
        if abs(a - b) < 0.05:
            continue
        equal = kernel_service.hermite_g(0.0, a, b)
        closed = kernel_service.johansson_real(a, b)
        worst = max(worst, abs(equal - closed) / (1.0 + abs(closed)))
    return _measured('hermite_triangle', worst, _tolerance(ctx.scenario, 'kernel_closed'), samples=samples)


def _random_smooth(rng, terms: int = 4) -> Callable:
    amplitudes = rng.standard_normal(terms)
    phases = rng.uniform(0.0, 2.0 * np.pi, terms)
    frequencies = np.arange(1, terms + 1)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.sin(np.multiply.outer(x, frequencies) + phases) @ amplitudes
    return f


def check_equal_time_variance(ctx: _Context, count: int = 5) -> List[CheckResult]:
    """Var⟨Y, f⟩ ≥ 0 by double quadrature for random smooth f, against the Chebyshev pairing"""
    s = ctx.scenario
    edge = equilibrium_density(harmonic(), s.beta).edge
    variances, worst = [], 0.0
    for _ in range(count):
        f = _random_smooth(ctx.rng)
        variance = kernel_service.equal_time_variance(f, edge, s.beta)
        expected = kernel_service.linear_statistic_covariance(f, f, edge, s.beta)
        variances.append(variance)
        worst = max(worst, abs(variance - expected) / (1.0 + abs(expected)))
    return [CheckResult('equal_time_psd', CheckStatus.PASSED if min(variances) >= 0 else CheckStatus.FAILED,
                        float(min(variances)), 0.0, {'variances': variances}),
            _measured('equal_time_variance', worst, _tolerance(s, 'equal_time_variance'), count=count)]


def check_gmap_kernel(ctx: _Context, samples: int = 100) -> CheckResult:
    gmap = gmap_service.g_map_build(equilibrium_density(harmonic(), 2.0), 2.0)
    x1, x2 = _hermite_points(ctx.rng, samples)
    worst = 0.0
    for a, b in zip(x1, x2):
        dt = float(ctx.rng.uniform(0.1, 1.0))
        value = gmap_service.stationary_two_time_g(gmap, dt, 0.0, a, b)
        expected = kernel_service.hermite_g(dt, a, b)
        worst = max(worst, abs(value - expected) / (1.0 + abs(expected)))
    return _measured('gmap_kernel', worst, _tolerance(ctx.scenario, 'kernel_gmap'), samples=samples)


def check_pde_kernel(ctx: _Context, samples: int = 100) -> CheckResult:
    density = equilibrium_density(harmonic(), 2.0)
    x1, x2 = _hermite_points(ctx.rng, samples)
    worst = 0.0
    for a, b in zip(x1, x2):
        dt = float(ctx.rng.uniform(0.2, 0.8))
        value = kernel_pde_service.pde_kernel_slots(density, a, b, dt)[0].real_kernel
        expected = kernel_service.hermite_g(dt, a, b)
        worst = max(worst, abs(value - expected) / (1.0 + abs(expected)))
    return _measured('pde_kernel', worst, _tolerance(ctx.scenario, 'kernel_pde'), samples=samples)


def check_quartic_flow(ctx: _Context, samples: int = 50) -> List[CheckResult]:
    """Numerical continuation flow against the quartic closed form, and the G-map residual"""
    worst_flow, worst_residual = 0.0, 0.0
    for c in (0.0, 1.0):
        density = equilibrium_density(quartic(c), 2.0)
        gmap = gmap_service.g_map_build(density, 2.0)
        tau, _ = gmap_service.quartic_constants(density.edge, c)
        for _ in range(samples):
            x1 = float(ctx.rng.uniform(-0.8, 0.8) * density.edge)
            t = float(ctx.rng.uniform(0.05, 0.5) * tau)
            z = gmap_service.continuation_flow(gmap, x1, t)
            worst_flow = max(worst_flow, abs(z - gmap_service.quartic_flow(x1, t, density.edge, c)))
            worst_residual = max(worst_residual, gmap_service.g_residual(gmap, x1, z, t))
    tolerance = _tolerance(ctx.scenario, 'quartic')
    return [_measured('quartic_flow', worst_flow, tolerance),
            _measured('g_map_residual', worst_residual, tolerance)]


def check_short_distance(ctx: _Context, samples: int = 20, eps: float = 1e-3) -> CheckResult:
    density = equilibrium_density(harmonic(), 2.0)
    worst = 0.0
    for _ in range(samples):
        x = float(ctx.rng.uniform(-1.0, 1.0))
        dx = float(ctx.rng.choice([-1.0, 1.0]) * ctx.rng.uniform(0.5, 1.5))
        dt = float(ctx.rng.uniform(0.5, 1.5))
        exact = kernel_service.hermite_g(eps * dt, x + eps * dx, x)
        leading = kernel_service.short_distance(float(density.density(x)), dx, dt, eps)
        worst = max(worst, abs(exact / leading - 1.0))
    return _measured('short_distance', worst, _tolerance(ctx.scenario, 'short_distance'), eps=eps)


def check_ou_identification(ctx: _Context) -> List[CheckResult]:
    s = ctx.scenario
    spectral = ou_service.hermite_spectral(min(s.ou.max_mode, 32), s.ou.fd_step)
    n = spectral.modes.astype(float)
    results = [
        _measured('ou_drift', float(np.max(np.abs(spectral.drift - n))), _tolerance(s, 'ou_drift')),
        _measured('ou_stationary', float(np.max(np.abs(spectral.stationary_cov - n / (2 * np.pi ** 2)))),
                  _tolerance(s, 'ou_stationary')),
    ]
    head = ou_service.hermite_spectral(min(s.ou.max_mode, 4), s.ou.fd_step)
    trajectory = ou_service.simulate(head, s.ou.t_end, s.ou.dt, seed=s.seed, replicas=s.ou.replicas)
    stats = ou_service.mode_statistics(trajectory, s.ou.lag)
    expected = np.exp(-head.drift * stats['lag']) * head.stationary_cov
    deviations = np.abs(stats['lag_covariance'] - expected) / stats['lag_covariance_se']
    results.append(_measured('ou_lag_covariance', float(np.max(deviations)), _tolerance(s, 'standard_errors'),
                             lag=float(stats['lag'][0]), modes=list(head.modes)))
    return results


def check_transforms(ctx: _Context) -> List[CheckResult]:
    s = ctx.scenario
    coeffs = ctx.rng.standard_normal(65) + 1j * ctx.rng.standard_normal(65)
    coeffs[0] = 0.0
    twice = hilbert_periodic(hilbert_periodic(coeffs))
    results = [_measured('hilbert_involution', float(np.max(np.abs(twice + coeffs))), _tolerance(s, 'transform'))]

    density = equilibrium_density(harmonic(), 2.0)
    edge = density.edge
    tolerance = _tolerance(s, 'cut_equation')
    residual, points = cut_equation_residual(density, 2.0, lambda x: x, tol=tolerance)
    results.append(_measured('cut_equation', residual, tolerance, points=points))

    inside = np.linspace(-0.9, 0.9, 41) * edge
    rho = plemelj_density(density.stieltjes, inside, eps=1e-3)
    results.append(_measured('plemelj', float(np.max(np.abs(rho - density.density(inside)))),
                             _tolerance(s, 'plemelj')))
    return results


def check_mean_moment(ctx: _Context) -> CheckResult:
    s = ctx.scenario
    density = equilibrium_density(harmonic(), s.beta)
    observed = kernel_pde_service.mean_moment(density, 2)
    return _measured('mean_moment', abs(observed - 0.5 * (1.0 - 0.5 * s.beta)), _tolerance(s, 'mean_moment'))


def _equilibrium_scenario(scenario: Scenario) -> Scenario:
    equilibrium = replace(scenario, initial=InitialSpec(InitialKind.EQUILIBRIUM))
    return sde_service.with_sde(equilibrium, start=StartMode.EQUILIBRIUM, burn_in=0.0)


def check_monte_carlo(ctx: _Context, lags: Sequence[float] = (0.0, 0.5)) -> List[CheckResult]:
    """Replica covariances of linear statistics at harmonic equilibrium within jackknife errors"""
    s = ctx.scenario
    if s.potential.family is not PotentialFamily.HARMONIC:
        return [_skipped('monte_carlo', 'exact equilibrium start needs the harmonic potential')]
    scenario = _equilibrium_scenario(s)
    edge = np.sqrt(s.beta)
    limit = _tolerance(s, 'standard_errors')
    results = []
    pairs = (('x', 'x'), ('x', 'x2'))
    for lag in lags:
        for f_name, g_name in pairs:
            f, g = sde_service.TEST_FUNCTIONS[f_name], sde_service.TEST_FUNCTIONS[g_name]
            estimate = sde_service.mc_covariance(scenario, f, g, lag, 0.0, workers=ctx.workers)
            theory = kernel_service.linear_statistic_covariance(f, g, edge, s.beta, lag)
            score = abs(estimate.estimate - theory) / max(estimate.standard_error, 1e-300)
            results.append(_measured(f'mc_cov_{f_name}_{g_name}_lag{lag:g}', score, limit,
                                     estimate=estimate.estimate, standard_error=estimate.standard_error,
                                     theory=theory, replicas=estimate.replicas,
                                     halvings=estimate.rejections))

    summary = sde_service.simulate_trajectories(scenario, times=[s.horizon], workers=ctx.workers)
    identities = sde_service.harmonic_identities(s.beta, s.sde.n_particles)
    sum_sq = summary.moments['sum_sq']
    score = abs(sum_sq.mean - identities['mean_sum_sq']) / max(sum_sq.standard_error, 1e-300)
    results.append(_measured('sde_mean_sum_sq', score, limit, mean=sum_sq.mean,
                             expected=identities['mean_sum_sq'], halvings=summary.rejections))
    return results


CHECKS: Dict[str, Callable] = {
    'hydro': lambda ctx: [check_hydro_scaling(ctx), check_mass(ctx), check_herglotz(ctx)],
    'support': check_support_edge,
    'characteristics': check_harmonic_characteristics,
    'kernels': lambda ctx: [check_hermite_triangle(ctx), check_gmap_kernel(ctx), check_pde_kernel(ctx),
                            check_short_distance(ctx), check_mean_moment(ctx), *check_equal_time_variance(ctx)],
    'quartic': check_quartic_flow,
    'ou': check_ou_identification,
    'transforms': check_transforms,
    'monte_carlo': check_monte_carlo,
}


def run_checks(scenario: Scenario, only: Optional[Sequence[str]] = None,
               workers: Optional[int] = None) -> VerifyReport:
    """Run the acceptance suite; numerical failures inside a group are recorded as failed checks"""
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown check group(s): {', '.join(unknown)}")
    ctx = _Context(scenario, workers)
    report = VerifyReport(scenario.name, scenario.seed)
    for name in names:
        started = time.perf_counter()
        try:
            outcome = CHECKS[name](ctx)
        except LogGasError as e:
            outcome = CheckResult(name, CheckStatus.FAILED, details={'error': str(e), **e.diagnostics})
        results = outcome if isinstance(outcome, list) else [outcome]
        elapsed = time.perf_counter() - started
        for result in results:
            result.details.setdefault('group', name)
            logger.info(f"{result.name}: {result.status.value} (observed={result.observed}, "
                        f"tolerance={result.tolerance})")
        logger.debug(f"Check group {name} took {elapsed:.2f}s")
        report.checks.extend(results)
    return report
