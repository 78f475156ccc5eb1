from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Tuple

import numpy as np

from .potential import Potential


class Closure(Enum):
    FREEZE = "freeze"
    ZERO_DERIVATIVE = "zero_derivative"


@dataclass(frozen=True)
class CharState:
    """One point of a complex characteristic; c carries −U(t, z(t))"""
    t: float
    z: complex
    zdot: complex
    c: complex
    logA: complex
    alive: bool = True
    kill_time: Optional[float] = None

    @property
    def u(self) -> complex:
        return -self.c


@dataclass(eq=False)
class FanSnapshot:
    """Fan state at one time, launch points in the same order as the fan"""
    t: float
    z: np.ndarray
    c: np.ndarray
    logA: np.ndarray
    dz: np.ndarray
    dc: np.ndarray
    alive: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return -self.c


@dataclass(eq=False)
class HydroField:
    """Hydrodynamic solution: moment trajectory plus characteristic fan"""
    potential: Potential
    beta: float
    initial: Any  # Density descriptor at t=0
    moments: Any  # MomentTrajectory
    launch: np.ndarray  # Launch points in Π₊
    times: np.ndarray
    solution: Any  # Dense ODE solution of the fan state
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = 'RK45'
    density_eps: Tuple[float, float] = (1e-3, 5e-4)
    kill_counts: dict = field(default_factory=dict)
    _interpolators: dict = field(default_factory=dict, repr=False)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])
