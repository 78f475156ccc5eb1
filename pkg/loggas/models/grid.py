from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np


@dataclass(eq=False)
class GridFunction:
    """Samples of a function on a uniform real grid (or on [0, 2π) for periodic use)"""
    xs: np.ndarray
    values: np.ndarray
    mean_removed: bool = False
    near_edge: Optional[np.ndarray] = None  # Quality flag for points within 1e-3 of a support edge

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.values = np.asarray(self.values)
        if self.xs.shape != self.values.shape:
            raise ValueError("Grid and values must have the same shape")

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        if len(self.xs) < 2:
            return False
        steps = np.diff(self.xs)
        return bool(np.all(steps > 0) and np.allclose(steps, steps[0], rtol=rtol, atol=0.0))

    def support(self, threshold: float = 0.0) -> Tuple[float, float]:
        """Smallest interval outside which |values| <= threshold"""
        nonzero = np.flatnonzero(np.abs(self.values) > threshold)
        if len(nonzero) == 0:
            raise ValueError("Grid function vanishes identically")
        return float(self.xs[nonzero[0]]), float(self.xs[nonzero[-1]])

    def rows(self) -> List[Tuple]:
        if np.iscomplexobj(self.values):
            return [(x, v.real, v.imag) for x, v in zip(self.xs, self.values)]
        return list(zip(self.xs, self.values))
