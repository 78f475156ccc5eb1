import logging
from typing import Callable, List, Optional

import numpy as np
from numpy.polynomial import legendre
from scipy import fft

from ..models.kernel import KernelMethod, KernelValue, Sign
from .transform_service import periodic_hilbert_grid

logger = logging.getLogger(__name__)

SIGN_SLOTS = [(Sign.PLUS, Sign.PLUS), (Sign.PLUS, Sign.MINUS),
              (Sign.MINUS, Sign.PLUS), (Sign.MINUS, Sign.MINUS)]


def _check_angles(*thetas) -> None:
    for theta in thetas:
        theta = np.asarray(theta)
        if np.any(np.isclose(np.sin(np.real(theta)), 0.0, atol=1e-14) & (np.imag(theta) == 0)):
            raise ValueError("edge singularity: angle at 0 or π")


def hermite_lambda(dt: float, theta1, theta2, s1: Sign = Sign.PLUS, s2: Sign = Sign.PLUS):
    """Λ^{s1 s2}(Δ; θ1, θ2) = 1/(8 sin(s1θ1) sin(s2θ2) sin²(w/2)), w = s1θ1 + s2θ2 − iΔ"""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    s1, s2 = Sign.parse(s1).value, Sign.parse(s2).value
    _check_angles(theta1, theta2)
    w = s1 * np.asarray(theta1) + s2 * np.asarray(theta2) - 1j * dt
    return 1.0 / (8.0 * np.sin(s1 * np.asarray(theta1)) * np.sin(s2 * np.asarray(theta2)) * np.sin(w / 2.0) ** 2)


def combine(plus_plus, plus_minus):
    """Real kernel g = −(1/2π²) Re[g^{++} − g^{+−}]"""
    return -np.real(np.asarray(plus_plus) - np.asarray(plus_minus)) / (2.0 * np.pi ** 2)


def hermite_angles(x, half_width: float = np.sqrt(2.0)):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= half_width):
        raise ValueError("edge singularity: point outside the open support")
    return np.arccos(x / half_width)


def hermite_angle_kernel(dt: float, phi):
    """g̃(Δ; φ) = −(1/8π²) Re sin⁻²((φ + iΔ)/2) = (1/2π²) Σ_{n≥1} n e^{−nΔ} cos nφ"""
    return -np.real(1.0 / np.sin((np.asarray(phi) + 1j * dt) / 2.0) ** 2) / (8.0 * np.pi ** 2)


def hermite_g(dt: float, x1, x2):
    """Two-time covariance kernel of the β=2 Hermite fluctuation field on (−√2, √2)"""
    theta1, theta2 = hermite_angles(x1), hermite_angles(x2)
    if dt == 0 and np.any(np.isclose(np.asarray(x1), np.asarray(x2), rtol=0.0, atol=1e-15)):
        raise ValueError("on-diagonal distribution: x1 == x2 at equal times")
    total = hermite_angle_kernel(dt, theta1 - theta2) + hermite_angle_kernel(dt, theta1 + theta2)
    return total / (2.0 * np.sin(theta1) * np.sin(theta2))


def johansson_factor(half_width: float, beta: float) -> float:
    """(2/β)(√2/A)², relating a one-cut equilibrium kernel to the β=2 Hermite one"""
    return (2.0 / beta) * 2.0 / half_width ** 2


def scaled_lambda(dt: float, x1, x2, s1, s2, half_width: float, beta: float):
    """Hermite Λ transported to support [−A, A] and inverse temperature β"""
    theta1 = hermite_angles(x1, half_width)
    theta2 = hermite_angles(x2, half_width)
    return johansson_factor(half_width, beta) * hermite_lambda(dt, theta1, theta2, s1, s2)


def kernel_set(dt: float, x1: float, x2: float, half_width: float = np.sqrt(2.0), beta: float = 2.0,
               t2: float = 0.0) -> List[KernelValue]:
    """All four sign slots in closed form, each carrying the combined real kernel"""
    if dt == 0 and x1 == x2:
        raise ValueError("on-diagonal distribution: x1 == x2 at equal times")
    values = {signs: complex(scaled_lambda(dt, x1, x2, *signs, half_width, beta)) for signs in SIGN_SLOTS}
    real = float(combine(values[(Sign.PLUS, Sign.PLUS)], values[(Sign.PLUS, Sign.MINUS)]))
    return [KernelValue(t2 + dt, x1, t2, x2, signs, values[signs], KernelMethod.CLOSED_FORM, real)
            for signs in SIGN_SLOTS]


def johansson_equal_time(x1: float, x2: float, half_width: float, beta: float = 2.0) -> List[KernelValue]:
    """Equal-time kernels of a one-cut equilibrium with support [−A, A]"""
    if abs(x1) >= half_width or abs(x2) >= half_width:
        raise ValueError("Johansson kernel needs both points inside the open support")
    return kernel_set(0.0, x1, x2, half_width, beta)


def johansson_real(x1, x2, half_width: float = np.sqrt(2.0), beta: float = 2.0):
    """Equal-time real kernel in x-coordinates.

    −(1/βπ²)(A² − x1x2)/(√((A²−x1²)(A²−x2²)) (x2 − x1)²), which is
    −(1/2π²)(2 − x1x2)/(√((2−x1²)(2−x2²))(x2 − x1)²) at A=√2, β=2.
    """
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    a2 = half_width ** 2
    core = (a2 - x1 * x2) / (np.sqrt((a2 - x1 ** 2) * (a2 - x2 ** 2)) * (x2 - x1) ** 2)
    return -(2.0 / beta) * core / (2.0 * np.pi ** 2)


def short_distance(rho_at_x: float, dx: float, dt: float, eps: float, beta: float = 2.0) -> float:
    """Leading singularity −(1/βπ²) ε⁻² Re[(δx + i(β/2)πρ δt)⁻²] near the diagonal"""
    if dx == 0 and dt == 0:
        raise ValueError("short_distance needs a nonzero offset")
    offset = dx + 1j * 0.5 * beta * np.pi * rho_at_x * dt
    return float(-np.real(offset ** -2) / (beta * np.pi ** 2 * eps ** 2))


def chebyshev_coefficients(f: Callable, half_width: float, n_modes: int = 64,
                           nodes: int = 512) -> np.ndarray:
    """a_n = (2/π)∫₀^π f(A cos θ) cos nθ dθ for n = 1..n_modes by a type-I DCT"""
    nodes = max(nodes, 2 * n_modes)
    theta = np.pi * np.arange(nodes + 1) / nodes
    spectrum = fft.dct(f(half_width * np.cos(theta)), type=1) / nodes
    return spectrum[1:n_modes + 1]


def linear_statistic_covariance(f: Callable, g: Callable, half_width: float, beta: float,
                                dt: float = 0.0, n_modes: int = 64) -> float:
    """Cov(⟨Y_t, f⟩, ⟨Y_s, g⟩) = (1/2β) Σ n e^{−n|t−s|} a_n b_n.

    Exact for the harmonic potential at any lag and for any one-cut equilibrium at
    equal times; the diagonal singularity is absorbed by the Chebyshev pairing.
    """
    a = chebyshev_coefficients(f, half_width, n_modes)
    b = chebyshev_coefficients(g, half_width, n_modes)
    n = np.arange(1, n_modes + 1)
    return float(np.sum(n * np.exp(-n * abs(dt)) * a * b) / (2.0 * beta))


def _angle_rule(points: int):
    """Gauss–Legendre nodes and weights on θ ∈ (0, π)"""
    nodes, weights = legendre.leggauss(points)
    return 0.5 * np.pi * (nodes + 1.0), 0.5 * np.pi * weights


def pair_kernel(kernel: Callable, f: Callable, g: Callable, half_width: float, points: int = 200) -> float:
    """∫∫ f(x1) g(x2) kernel(x1, x2) dx1 dx2 for a kernel smooth off the edges.

    Gauss–Legendre in θ with x = A cos θ absorbs the 1/(sin θ1 sin θ2) edge factor.
    """
    theta, weights = _angle_rule(points)
    x = half_width * np.cos(theta)
    jac = half_width * np.sin(theta) * weights
    values = kernel(x[:, None], x[None, :])
    return float(np.einsum('i,j,ij->', f(x) * jac, g(x) * jac, values))


def equal_time_variance(f: Callable, half_width: float, beta: float = 2.0, points: int = 200) -> float:
    """Var⟨Y, f⟩ = −½ ∫∫ (f(x1) − f(x2))² g(x1, x2) dx1 dx2 for the equal-time kernel.

    The kernel integrates to zero against constants, which trades the (x1 − x2)⁻²
    singularity for the squared difference quotient. Rules of `points` and
    `points + 1` nodes keep the two grids apart; every term is nonnegative.
    """
    theta1, w1 = _angle_rule(points)
    theta2, w2 = _angle_rule(points + 1)
    x1, x2 = half_width * np.cos(theta1), half_width * np.cos(theta2)
    quotient = (f(x1)[:, None] - f(x2)[None, :]) / (x1[:, None] - x2[None, :])
    integrand = (half_width ** 2 - x1[:, None] * x2[None, :]) * quotient ** 2
    return float(w1 @ integrand @ w2 / (2.0 * beta * np.pi ** 2))


def hydro_fluct_operator_check(kernel: Callable, dt: float, h: float = 1e-2, points: int = 256,
                               coarse_tol: float = 1e-10) -> float:
    """sup |∂_Δ g̃ + ∂_θ H g̃| on an angle grid, with a central difference in Δ.

    kernel(Δ, θ) must be 2π-periodic and mean-zero in θ.
    """
    if dt - h <= 0:
        raise ValueError("hydro_fluct_operator_check needs dt > h")
    theta = 2.0 * np.pi * np.arange(points) / points
    samples = kernel(dt, theta)
    spectrum = np.abs(fft.rfft(samples))
    if spectrum[-1] > coarse_tol * max(float(np.max(spectrum)), 1e-300):
        raise ValueError("grid too coarse: kernel not resolved at the Nyquist mode")
    time_derivative = (kernel(dt + h, theta) - kernel(dt - h, theta)) / (2.0 * h)
    residual = time_derivative + periodic_hilbert_grid(samples, derivative=True)
    worst = float(np.max(np.abs(residual)))
    logger.debug(f"Hydro fluctuation residual at dt={dt}, h={h}: {worst:.3g}")
    return worst


def real_kernel_row(values: List[KernelValue]) -> Optional[tuple]:
    if not values:
        return None
    v = values[0]
    return (v.t1, v.x1, v.t2, v.x2, v.real_kernel)
