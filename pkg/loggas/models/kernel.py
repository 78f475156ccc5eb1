from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Tuple

import numpy as np


class KernelMethod(Enum):
    CLOSED_FORM = "closed"
    G_MAP = "gmap"
    PDE_CHARACTERISTICS = "pde"


class Sign(Enum):
    PLUS = 1
    MINUS = -1

    @property
    def label(self) -> str:
        return '+' if self is Sign.PLUS else '-'

    @classmethod
    def parse(cls, value) -> 'Sign':
        if isinstance(value, Sign):
            return value
        if value in ('+', 1, '1', '+1'):
            return cls.PLUS
        if value in ('-', -1, '-1'):
            return cls.MINUS
        raise ValueError(f"Unknown sign label: {value!r}")


@dataclass(frozen=True)
class KernelValue:
    """One sign slot g^{ε1,ε2}(t1,x1;t2,x2) of the fluctuation covariance"""
    t1: float
    x1: float
    t2: float
    x2: float
    signs: Tuple[Sign, Sign]
    value: complex
    method: KernelMethod
    real_kernel: Optional[float] = None

    def row(self) -> tuple:
        return (self.t1, self.x1, self.t2, self.x2, self.signs[0].label, self.signs[1].label,
                self.value.real, self.value.imag, self.method.value)


@dataclass(eq=False)
class GMap:
    """G(x) = (2/β)∫₀ˣ dy/ρ_eq(y) tabulated on the support interior"""
    beta: float
    density: Any  # EquilibriumDensity
    xs: np.ndarray
    values: np.ndarray

    @property
    def edge(self) -> float:
        return self.density.edge
