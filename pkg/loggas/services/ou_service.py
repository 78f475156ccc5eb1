import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import fft

from ..exceptions import NumericalError
from ..models.ou import OUSpectral, OUTrajectory

logger = logging.getLogger(__name__)


def hermite_mode_kernel(dt, n):
    """K̂(Δ, n) = |n| e^{−|n|Δ}/(2π²), the cosine-mode covariances of the Hermite field"""
    n = np.abs(np.asarray(n, dtype=float))
    return n * np.exp(-n * np.asarray(dt, dtype=float)) / (2.0 * np.pi ** 2)


def identify(kernel: Callable, modes: Sequence[int], fd_step: float = 1e-3) -> OUSpectral:
    """Per-mode drift, noise and stationary covariance of a stationary Gaussian process.

    Â(n) = −d/dΔ log K̂(Δ, n) at Δ = 0⁺ by the one-sided second-order stencil, and
    the noise follows from the Lyapunov relation ½|Σ̂(n)|² = Â(n) K̂_∞(n).
    """
    modes = np.asarray(modes, dtype=int)
    if np.any(modes == 0):
        raise ValueError("Mode n=0 is excluded")
    samples = np.array([kernel(k * fd_step, modes) for k in range(3)], dtype=float)
    if np.any(samples <= 0):
        bad = int(modes[np.flatnonzero(np.any(samples <= 0, axis=0))[0]])
        raise NumericalError(f"kernel not positive for mode n={bad}", {'mode': bad})
    logs = np.log(samples)
    drift = -(-3.0 * logs[0] + 4.0 * logs[1] - logs[2]) / (2.0 * fd_step)
    if np.any(drift <= 0):
        bad = int(modes[np.flatnonzero(drift <= 0)[0]])
        raise NumericalError(f"non-decaying mode n={bad}", {'mode': bad})
    stationary = samples[0]
    return OUSpectral(modes, drift, drift * stationary, stationary)


def hermite_spectral(max_mode: int = 64, fd_step: float = 1e-3) -> OUSpectral:
    return identify(hermite_mode_kernel, np.arange(1, max_mode + 1), fd_step)


def angle_mode_kernel(kernel: Callable, dt: float, max_mode: int, points: int = 1024) -> np.ndarray:
    """K̂(Δ, n) for n = 1..max_mode from samples of an angle kernel φ ↦ g̃(Δ; φ)"""
    if dt <= 0:
        raise ValueError("angle_mode_kernel needs dt > 0 (the equal-time kernel is singular)")
    if points < 2 * max_mode + 2:
        raise ValueError("Too few angle samples for the requested modes")
    phi = 2.0 * np.pi * np.arange(points) / points
    spectrum = fft.rfft(kernel(dt, phi)) / points
    return 2.0 * np.real(spectrum[1:max_mode + 1])


def simulate(spectral: OUSpectral, t_end: float, dt: float, seed: int = 0, replicas: int = 1,
             record_dt: Optional[float] = None, initial: Optional[np.ndarray] = None) -> OUTrajectory:
    """Exact-in-law recursion a ← e^{−Â dt} a + √((noise/Â)(1 − e^{−2Â dt})) ξ per mode.

    Without `initial` every replica starts from the stationary law.
    """
    if dt * float(np.max(spectral.drift)) >= 0.5:
        raise ValueError(f"instability margin violated: dt·max A = {dt * float(np.max(spectral.drift)):.3g}")
    steps = int(round(t_end / dt))
    record_dt = max(dt, t_end / 500.0) if record_dt is None else record_dt
    stride = max(1, int(round(record_dt / dt)))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    decay = np.exp(-spectral.drift * dt)
    spread = np.sqrt(spectral.noise_sq / spectral.drift * (1.0 - decay ** 2))
    if initial is None:
        state = rng.standard_normal((replicas, len(spectral.modes))) * np.sqrt(spectral.noise_sq / spectral.drift)
    else:
        state = np.broadcast_to(np.asarray(initial, dtype=float), (replicas, len(spectral.modes))).copy()
    times, records = [0.0], [state.copy()]
    for k in range(1, steps + 1):
        state = decay * state + spread * rng.standard_normal(state.shape)
        if k % stride == 0:
            times.append(k * dt)
            records.append(state.copy())
    logger.debug(f"Simulated {len(spectral.modes)} modes x {replicas} replicas for {steps} steps")
    return OUTrajectory(np.array(times), spectral.modes.copy(), np.array(records))


def assemble_field(coefficients: np.ndarray, modes: Sequence[int], theta) -> np.ndarray:
    """√2 Σ a_n cos nθ; the trailing axis of coefficients runs over modes"""
    theta = np.asarray(theta, dtype=float)
    basis = np.cos(np.multiply.outer(np.asarray(modes, dtype=float), theta))
    return np.sqrt(2.0) * np.tensordot(coefficients, basis, axes=([-1], [0]))


def mode_statistics(trajectory: OUTrajectory, lag: float = 0.0) -> Dict[str, np.ndarray]:
    """Per-mode variance and lag covariance, each with its standard error over replicas"""
    times = trajectory.times
    spacing = times[1] - times[0]
    lag_steps = int(round(lag / spacing))
    if lag_steps >= len(times):
        raise ValueError("lag exceeds the simulated horizon")
    coeffs = trajectory.coefficients
    replicas = coeffs.shape[1]
    variance = np.mean(coeffs ** 2, axis=0)
    head = coeffs[:len(times) - lag_steps]
    tail = coeffs[lag_steps:]
    lagged = np.mean(head * tail, axis=0)
    return {
        'modes': trajectory.modes,
        'variance': variance.mean(axis=0),
        'variance_se': variance.std(axis=0, ddof=1) / np.sqrt(replicas),
        'lag_covariance': lagged.mean(axis=0),
        'lag_covariance_se': lagged.std(axis=0, ddof=1) / np.sqrt(replicas),
        'lag': np.full(len(trajectory.modes), lag_steps * spacing),
    }


def truncation_tail(spectral: OUSpectral, cutoff: int) -> float:
    """Σ_{|n|>cutoff} K̂_∞(n) over the identified modes, the variance lost by truncation"""
    return float(np.sum(spectral.stationary_cov[np.abs(spectral.modes) > cutoff]))
