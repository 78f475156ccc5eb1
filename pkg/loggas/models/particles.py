from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class SeedRecord:
    """Counter-based stream coordinates: (entropy, replica) key plus the step counter"""
    entropy: int
    replica: int = 0
    step: int = 0

    def advanced(self, steps: int = 1) -> 'SeedRecord':
        return SeedRecord(self.entropy, self.replica, self.step + steps)


@dataclass(frozen=True, eq=False)
class ParticleState:
    """Ordered N-particle configuration λ¹ < … < λᴺ at time t"""
    lambdas: np.ndarray
    t: float
    seed: SeedRecord
    rejections: int = 0  # Halvings performed so far on this trajectory

    def __post_init__(self):
        object.__setattr__(self, 'lambdas', np.asarray(self.lambdas, dtype=float))

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def is_ordered(self) -> bool:
        return bool(np.all(np.diff(self.lambdas) > 0))

    def empirical_measure(self) -> 'EmpiricalMeasure':
        return EmpiricalMeasure(self.lambdas.copy())


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """(1/N) Σ δ_{λⁱ}"""
    atoms: np.ndarray

    @property
    def weight(self) -> float:
        return 1.0 / len(self.atoms)

    def pair(self, f) -> float:
        return float(np.mean(f(self.atoms)))


@dataclass
class RunningMoments:
    """Count, mean and sum of squared deviations; merges like a monoid"""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: 'RunningMoments') -> 'RunningMoments':
        if other.count == 0:
            return RunningMoments(self.count, self.mean, self.m2)
        if self.count == 0:
            return RunningMoments(other.count, other.mean, other.m2)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta ** 2 * self.count * other.count / count
        return RunningMoments(count, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else float('nan')

    @property
    def standard_error(self) -> float:
        return float(np.sqrt(self.variance / self.count)) if self.count > 1 else float('nan')


@dataclass(frozen=True)
class CovarianceEstimate:
    """Monte Carlo covariance of two paired fluctuations with its jackknife error"""
    estimate: float
    standard_error: float
    replicas: int
    t1: float
    t2: float
    mean_f: Optional[float] = None
    mean_g: Optional[float] = None
    rejections: int = field(default=0)


@dataclass(eq=False)
class SimulationResult:
    """Trajectory dump rows (replica, t, i, λ) and merged summaries at the last time"""
    rows: List[Tuple[int, float, int, float]]
    moments: Dict[str, RunningMoments]
    rejections: int
    replicas: int
    times: Tuple[float, ...] = ()
