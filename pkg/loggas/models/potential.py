from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np


class PotentialFamily(Enum):
    HARMONIC = "harmonic"
    QUARTIC = "quartic"
    GENERAL = "general"


@dataclass(frozen=True)
class Potential:
    """Convex polynomial confining potential V, coefficients in ascending degree"""
    coeffs: Tuple[float, ...]
    alpha: float  # Lower bound for V'' on the validation window

    def __post_init__(self):
        coeffs = [float(c) for c in self.coeffs]
        # Trailing zeros would hide the true degree
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        object.__setattr__(self, 'coeffs', tuple(coeffs))
        degree = len(coeffs) - 1
        if degree < 2 or degree % 2 != 0:
            raise ValueError(f"Potential degree must be even and at least 2, got {degree}")
        if coeffs[-1] <= 0:
            raise ValueError("Leading coefficient of V must be positive")
        if self.alpha < 0:
            raise ValueError(f"Convexity bound alpha must be nonnegative, got {self.alpha}")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def family(self) -> PotentialFamily:
        """Closed-form family, ignoring the additive constant"""
        c = self.coeffs
        if self.degree == 2 and c[1] == 0.0 and c[2] == 0.5:
            return PotentialFamily.HARMONIC
        if self.degree == 4 and c[1] == 0.0 and c[3] == 0.0 and c[4] == 0.25 and c[2] >= 0.0:
            return PotentialFamily.QUARTIC
        return PotentialFamily.GENERAL

    @property
    def quartic_c(self) -> float:
        """The c in V = z⁴/4 + c z²/2"""
        return 2.0 * self.coeffs[2]

    def derivative_coeffs(self, order: int) -> np.ndarray:
        return np.polynomial.polynomial.polyder(np.asarray(self.coeffs), order)

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            if k == 0:
                terms.append(f"{c:g}")
            elif k == 1:
                terms.append(f"{c:g} x")
            else:
                terms.append(f"{c:g} x^{k}")
        return "V(x) = " + (" + ".join(terms) if terms else "0")


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Raw moments m_0..m_K of a density"""
    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'm', np.asarray(self.m, dtype=float))

    @property
    def K(self) -> int:
        return len(self.m) - 1

    def __getitem__(self, k: int) -> float:
        return self.m[k]

    def mass_defect(self) -> float:
        return abs(self.m[0] - 1.0)

    def even_moments_nonnegative(self) -> bool:
        return bool(np.all(self.m[::2] >= 0.0))

    def hankel_positive(self, size: int = 3) -> bool:
        """Positive definiteness of the leading Hankel matrix [m_{i+j}]"""
        size = min(size, self.K // 2 + 1)
        hankel = np.array([[self.m[i + j] for j in range(size)] for i in range(size)])
        return bool(np.all(np.linalg.eigvalsh(hankel) > 0.0))
