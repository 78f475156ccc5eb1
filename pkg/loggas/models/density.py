from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate

from .grid import GridFunction
from .potential import MomentVector, PotentialFamily


def sqrt_cut(z, half_width: float) -> np.ndarray:
    """√(z²−A²) with its cut on [−A, A], behaving like z at infinity.

    Real points inside the cut return the boundary value from Π₊.
    """
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z - half_width) * np.sqrt(z + half_width)


@dataclass(frozen=True)
class EquilibriumDensity:
    """Closed-form one-cut density: the harmonic semicircle (optionally dilated by
    `scale`) or the quartic equilibrium of V = z⁴/4 + c z²/2.

    U denotes the Stieltjes transform ∫ρ(x)/(x−z)dx, so U(z) ~ −1/z at infinity.
    """
    family: PotentialFamily
    beta: float
    half_width: float  # A, before dilation
    c: float = 0.0
    scale: float = 1.0

    @property
    def edge(self) -> float:
        return self.half_width * self.scale

    @property
    def support(self) -> Tuple[float, float]:
        return -self.edge, self.edge

    @property
    def is_equilibrium(self) -> bool:
        return self.scale == 1.0

    def _poly(self, w, order: int = 0):
        if self.family is PotentialFamily.HARMONIC:
            return np.ones_like(w) if order == 0 else np.zeros_like(w)
        a = self.half_width ** 2 / 2 + self.c
        return (w ** 2 + a, 2 * w, 2 * np.ones_like(w))[order]

    def _vprime(self, w, order: int = 0):
        if self.family is PotentialFamily.HARMONIC:
            return (w, np.ones_like(w), np.zeros_like(w))[order]
        return (w ** 3 + self.c * w, 3 * w ** 2 + self.c, 6 * w)[order]

    def stieltjes(self, z, order: int = 0) -> np.ndarray:
        """U^(order)(z) for order 0, 1 or 2"""
        s = self.scale
        w = np.asarray(z, dtype=complex) / s
        root = sqrt_cut(w, self.half_width)
        k = 2.0 / self.beta
        if order == 0:
            u = -self._vprime(w) + self._poly(w) * root
        elif order == 1:
            u = -self._vprime(w, 1) + self._poly(w, 1) * root + self._poly(w) * w / root
        elif order == 2:
            u = (-self._vprime(w, 2) + self._poly(w, 2) * root + 2 * self._poly(w, 1) * w / root
                 - self._poly(w) * self.half_width ** 2 / root ** 3)
        else:
            raise ValueError(f"Unsupported derivative order {order}")
        return k * u / s ** (order + 1)

    def density(self, x) -> np.ndarray:
        w = np.asarray(x, dtype=float) / self.scale
        gap = np.clip(self.half_width ** 2 - w ** 2, 0.0, None)
        return (2.0 / (self.beta * np.pi)) * np.real(self._poly(w)) * np.sqrt(gap) / self.scale

    def analytic_factor(self, z) -> np.ndarray:
        """h(z) with ρ(z) = h(z)·√(edge² − z²) on the support"""
        w = np.asarray(z, dtype=complex) / self.scale
        return (2.0 / (self.beta * np.pi)) * self._poly(w) / self.scale ** 2

    def continued_density(self, z) -> np.ndarray:
        """Analytic continuation ρ^C(z) = (U(z) + (2/β)V'(z))/(iπ) into Π₊"""
        w = np.asarray(z, dtype=complex) / self.scale
        return (2.0 / (self.beta * np.pi)) * self._poly(w) * (-1j) * sqrt_cut(w, self.half_width) / self.scale

    def angle(self, z) -> np.ndarray:
        """θ(z) = arccos(z/edge); principal branch maps Π₊ to Im θ < 0"""
        return np.arccos(np.asarray(z, dtype=complex) / self.edge)

    def moments(self, order: int) -> MomentVector:
        if self.family is PotentialFamily.HARMONIC:
            m = np.zeros(order + 1)
            catalan = 1.0
            for k in range(0, order + 1, 2):
                j = k // 2
                m[k] = catalan * (self.edge / 2) ** k
                catalan = catalan * 2 * (2 * j + 1) / (j + 2)
            return MomentVector(m)
        return MomentVector([self.integrate(lambda x, k=k: x ** k) for k in range(order + 1)])

    def integrate(self, f) -> float:
        """∫ f ρ dx with the square-root edges absorbed into the quadrature weight"""
        b = self.edge
        k = 2.0 / (self.beta * np.pi)

        def smooth_part(x):
            return f(x) * k * np.real(self._poly(x / self.scale)) / self.scale ** 2

        value, _ = integrate.quad(smooth_part, -b, b, weight='alg', wvar=(0.5, 0.5),
                                  epsabs=1e-14, epsrel=1e-13, limit=200)
        return value


@dataclass(frozen=True, eq=False)
class TabulatedDensity:
    """Density given as samples on a uniform grid, zero outside it"""
    grid: GridFunction
    beta: float

    @property
    def support(self) -> Tuple[float, float]:
        return self.grid.support()

    @property
    def edge(self) -> float:
        a, b = self.support
        return max(abs(a), abs(b))

    @property
    def is_equilibrium(self) -> bool:
        return False

    def density(self, x) -> np.ndarray:
        return np.interp(x, self.grid.xs, np.real(self.grid.values), left=0.0, right=0.0)

    def stieltjes(self, z, order: int = 0) -> np.ndarray:
        from ..services.transform_service import stieltjes
        return stieltjes(self.grid, z, order=order)

    def moments(self, order: int) -> MomentVector:
        xs = self.grid.xs
        values = np.real(self.grid.values)
        return MomentVector([integrate.simpson(values * xs ** k, x=xs) for k in range(order + 1)])

    def integrate(self, f) -> float:
        return float(integrate.simpson(f(self.grid.xs) * np.real(self.grid.values), x=self.grid.xs))
