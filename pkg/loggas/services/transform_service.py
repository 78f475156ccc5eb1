import logging
from math import factorial
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import fft, integrate, signal

from ..exceptions import NumericalError
from ..models.grid import GridFunction

logger = logging.getLogger(__name__)

NEAR_EDGE = 1e-3


def stieltjes(density: Union[GridFunction, Callable], z, order: int = 0,
              support: Optional[Tuple[float, float]] = None):
    """d^order/dz^order of ∫ φ(x)/(x−z) dx.

    Grid densities use composite Simpson quadrature; callables need their support
    and are integrated adaptively.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if isinstance(density, GridFunction):
        xs = density.xs
        values = np.asarray(density.values)
        lo, hi = density.support()
        on_axis = (z_arr.imag == 0) & (z_arr.real >= lo) & (z_arr.real <= hi)
        if np.any(on_axis):
            raise ValueError("z lies on the support of the density; use boundary_value")
        weight = factorial(order) / (xs[None, :] - z_arr[:, None]) ** (order + 1)
        result = integrate.simpson(values[None, :] * weight, x=xs, axis=1)
    else:
        if support is None:
            raise ValueError("A callable density needs its support")
        lo, hi = support
        result = np.array([_stieltjes_quad(density, zi, order, lo, hi) for zi in z_arr])
    return result[0] if np.ndim(z) == 0 else result.reshape(np.shape(z))


def _stieltjes_quad(density: Callable, z: complex, order: int, lo: float, hi: float) -> complex:
    if z.imag == 0 and lo <= z.real <= hi:
        raise ValueError("z lies on the support of the density; use boundary_value")
    scale = factorial(order)

    def kernel(x):
        return density(x) * scale / (x - z) ** (order + 1)

    points = [z.real] if lo < z.real < hi else None
    options = dict(limit=400, epsabs=1e-13, epsrel=1e-12, points=points)
    re, _ = integrate.quad(lambda x: kernel(x).real, lo, hi, **options)
    im, _ = integrate.quad(lambda x: kernel(x).imag, lo, hi, **options)
    return complex(re, im)


def hilbert_line(f: GridFunction, pad_factor: int = 4) -> GridFunction:
    """Hf(x) = (1/π) p.v.∫ f(y)/(x−y) dy by FFT with the multiplier −i·sgn(s).

    The data is tapered to zero over a ramp, zero padded, transformed as a periodic
    function and corrected for the periodic images with the smooth kernel
    1/u − (π/L)cot(πu/L).
    """
    if not f.is_uniform():
        raise ValueError("hilbert_line requires a uniform grid")
    n = len(f.xs)
    h = f.spacing
    values = np.asarray(f.values)
    ramp = max(n // 4, 1)
    ramp_shape = 0.5 * (1 + np.cos(np.pi * np.arange(1, ramp + 1) / (ramp + 1)))
    extended = np.concatenate([values[0] * ramp_shape[::-1], values, values[-1] * ramp_shape])
    total = fft.next_fast_len(pad_factor * n)
    period = total * h

    padded = np.zeros(total, dtype=complex)
    padded[:n + ramp] = extended[ramp:]
    padded[total - ramp:] = extended[:ramp]
    freqs = fft.fftfreq(total)
    multiplier = -1j * np.sign(freqs)
    if total % 2 == 0:
        multiplier[total // 2] = 0.0
    periodic = fft.ifft(multiplier * fft.fft(padded))[:n]

    m = len(extended)
    offsets = h * np.arange(-(m - 1), m)
    kernel = np.zeros_like(offsets)
    nonzero = offsets != 0
    u = offsets[nonzero]
    kernel[nonzero] = 1.0 / u - (np.pi / period) / np.tan(np.pi * u / period)
    images = signal.fftconvolve(extended, kernel) * h / np.pi
    transformed = periodic + images[m - 1 + ramp:m - 1 + ramp + n]

    if not np.iscomplexobj(values):
        transformed = transformed.real
    return GridFunction(f.xs.copy(), transformed, mean_removed=f.mean_removed)


def cut_equation_residual(density, beta: float, v_prime: Callable, tol: float = 1e-6, points: int = 2 ** 13 + 1,
                          max_points: int = 2 ** 20 + 1, extent: float = 1.5,
                          interior: float = 0.5) -> Tuple[float, int]:
    """sup |(β/2)π·Hρ − V'| over |x| ≤ interior·A, doubling the grid until it drops below tol.

    Returns the residual and the number of grid points that reached it.
    """
    edge = density.edge
    while True:
        xs = np.linspace(-extent * edge, extent * edge, points)
        transformed = hilbert_line(GridFunction(xs, density.density(xs)))
        inside = np.abs(xs) <= interior * edge
        residual = float(np.max(np.abs(0.5 * beta * np.pi * transformed.values[inside] - v_prime(xs[inside]))))
        logger.debug(f"Cut equation on {points} points: residual {residual:.3g}")
        if residual <= tol:
            return residual, points
        if 2 * points - 1 > max_points:
            raise NumericalError("grid too coarse", {'points': points, 'residual': residual, 'tol': tol})
        points = 2 * points - 1


def boundary_value(density: GridFunction, x) -> np.ndarray:
    """U(x+i0) = −π·Hρ(x) + iπρ(x)"""
    transformed = hilbert_line(density)
    h_rho = np.interp(x, density.xs, np.real(transformed.values))
    rho = np.interp(x, density.xs, np.real(density.values), left=0.0, right=0.0)
    return -np.pi * h_rho + 1j * np.pi * rho


def _check_zero_mean(c0: complex, scale: float) -> None:
    if abs(c0) > 1e-12 * max(scale, 1.0):
        raise ValueError("zero-mean required for the periodic Hilbert transform")


def hilbert_periodic(coeffs, ns=None) -> np.ndarray:
    """c_n ↦ −i·sgn(n)·c_n; ns defaults to FFT ordering"""
    coeffs = np.asarray(coeffs, dtype=complex)
    if ns is None:
        ns = np.rint(fft.fftfreq(len(coeffs)) * len(coeffs)).astype(int)
    ns = np.asarray(ns)
    scale = float(np.max(np.abs(coeffs))) if len(coeffs) else 0.0
    _check_zero_mean(complex(np.sum(coeffs[ns == 0])), scale)
    return -1j * np.sign(ns) * coeffs


def periodic_hilbert_grid(values, derivative: bool = False) -> np.ndarray:
    """Periodic Hilbert transform of samples on a uniform grid of [0, 2π).

    With derivative=True returns ∂_θ H, whose multiplier is |n|.
    """
    values = np.asarray(values)
    m = values.shape[0]
    spectrum = fft.fft(values, axis=0)
    scale = float(np.max(np.abs(spectrum))) if m else 0.0
    _check_zero_mean(complex(np.sum(spectrum[0])), scale)
    ns = np.rint(fft.fftfreq(m) * m)
    multiplier = np.abs(ns) if derivative else -1j * np.sign(ns)
    if m % 2 == 0:
        multiplier[m // 2] = 0.0
    multiplier = multiplier.reshape((m,) + (1,) * (values.ndim - 1))
    result = fft.ifft(multiplier * spectrum, axis=0)
    return result.real if not np.iscomplexobj(values) else result


def plemelj_density(u_plus: Callable, x, eps: Optional[float] = None) -> np.ndarray:
    """ρ(x) = (1/π) Im U(x+i0).

    Without eps, u_plus returns boundary values at real x. With eps, u_plus is the
    transform on Π₊ and the levels ε, ε/2 are Richardson-extrapolated to the axis.
    """
    x = np.asarray(x, dtype=float)
    if eps is None:
        rho = np.imag(u_plus(x)) / np.pi
    else:
        coarse = np.imag(u_plus(x + 1j * eps)) / np.pi
        fine = np.imag(u_plus(x + 0.5j * eps)) / np.pi
        rho = 2.0 * fine - coarse
    if np.any(rho < -1e-8):
        worst = float(np.min(rho))
        raise NumericalError("not a density", {'min_value': worst})
    return rho


def near_edge_mask(x, support: Tuple[float, float], tol: float = NEAR_EDGE) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    a, b = support
    return (np.abs(x - a) < tol) | (np.abs(x - b) < tol)
