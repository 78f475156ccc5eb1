from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class OUSpectral:
    """Diagonal Ornstein–Uhlenbeck data per Fourier mode"""
    modes: np.ndarray
    drift: np.ndarray  # Â(n)
    noise_sq: np.ndarray  # ½|Σ̂(n)|²
    stationary_cov: np.ndarray  # K̂_∞(n)

    def __post_init__(self):
        self.modes = np.asarray(self.modes, dtype=int)
        self.drift = np.asarray(self.drift, dtype=float)
        self.noise_sq = np.asarray(self.noise_sq, dtype=float)
        self.stationary_cov = np.asarray(self.stationary_cov, dtype=float)
        if np.any(self.modes == 0):
            raise ValueError("Mode n=0 is excluded")
        for name in ('drift', 'noise_sq', 'stationary_cov'):
            values = getattr(self, name)
            if values.shape != self.modes.shape or not np.all(np.isfinite(values)):
                raise ValueError(f"OU {name} must be finite with one entry per mode")

    def lyapunov_defect(self) -> np.ndarray:
        return np.abs(self.stationary_cov * self.drift - self.noise_sq)

    def rows(self):
        return list(zip(self.modes, self.drift, self.stationary_cov, self.noise_sq))


@dataclass(eq=False)
class OUTrajectory:
    """Cosine-mode coefficients, shape (times, replicas, modes)"""
    times: np.ndarray
    modes: np.ndarray
    coefficients: np.ndarray

    def rows(self, replica: int = 0):
        for i, t in enumerate(self.times):
            for j, n in enumerate(self.modes):
                yield (t, n, self.coefficients[i, replica, j], 0.0)
