from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def orientation(self) -> float:
        return 1.0 if self is Side.RIGHT else -1.0


@dataclass(frozen=True)
class EdgePoint:
    """Edge of the support at one time and its pre-image under the real flow"""
    t: float
    side: Side
    x_star: float
    position: float
    boundary_case: bool = False  # No sign change of Z'_t was found
    margin: float = float('nan')  # Smallest Z'_t on the scan beyond the pre-image
    speed: float = float('nan')  # ẋ at the pre-image, which equals db_t/dt


@dataclass(eq=False)
class EdgeTrajectory:
    """Sampled t ↦ (a_t, b_t) with pre-images a₀*(t), b₀*(t)"""
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    a_star: np.ndarray
    b_star: np.ndarray
    jacobian_margin: np.ndarray
    boundary_flags: List[bool] = field(default_factory=list)
    speed: Optional[np.ndarray] = None

    def rows(self):
        return list(zip(self.times, self.a_star, self.a, self.b_star, self.b, self.jacobian_margin))


@dataclass(frozen=True)
class JumpReport:
    """Discrete jumps of b_t beyond C·Δ + tol"""
    upward: List[int]
    downward: List[int]
    largest_upward: Optional[float] = None

    @property
    def ok(self) -> bool:
        return not self.upward
