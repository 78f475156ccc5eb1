from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from .hydro import Closure
from .potential import Potential

SCHEMA_VERSION = 'loggas/1'


class InitialKind(Enum):
    SCALED_SEMICIRCLE = "scaled_semicircle"
    EQUILIBRIUM = "equilibrium"
    TABULATED = "tabulated"


class StartMode(Enum):
    QUANTILE = "quantile"
    IID = "iid"
    EQUILIBRIUM = "equilibrium"


@dataclass(frozen=True)
class InitialSpec:
    kind: InitialKind = InitialKind.EQUILIBRIUM
    s0: float = 1.0
    path: Optional[str] = None  # Two-column CSV (x, rho) for tabulated densities


@dataclass(frozen=True)
class SdeSettings:
    n_particles: int = 50
    dt: float = 1e-3
    dt_min: float = 1e-10
    radius: float = 10.0
    replicas: int = 100
    burn_in: float = 0.0
    start: StartMode = StartMode.QUANTILE
    block_steps: int = 256


@dataclass(frozen=True)
class HydroSettings:
    closure: Closure = Closure.FREEZE
    order: int = 12
    n_real: int = 24
    n_imag: int = 16
    imag_min: float = 1e-4
    imag_max: float = 1.0
    real_extent: float = 3.0
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = 'RK45'
    density_eps: Tuple[float, float] = (1e-3, 5e-4)


@dataclass(frozen=True)
class KernelSettings:
    x1: float = 0.3
    x2: float = -0.4
    t1: float = 0.5
    t2: float = 0.0
    eps: Tuple[float, float] = (1e-4, 5e-5)
    n_points: int = 9


@dataclass(frozen=True)
class OUSettings:
    max_mode: int = 64
    dt: float = 1e-3
    t_end: float = 5.0
    replicas: int = 200
    fd_step: float = 1e-3
    lag: float = 0.5


@dataclass(frozen=True)
class Scenario:
    """Validated run configuration"""
    name: str
    potential: Potential
    beta: float
    initial: InitialSpec
    horizon: float
    times: Tuple[float, ...]
    seed: int = 0
    output_dir: str = 'out'
    sde: SdeSettings = field(default_factory=SdeSettings)
    hydro: HydroSettings = field(default_factory=HydroSettings)
    kernel: KernelSettings = field(default_factory=KernelSettings)
    ou: OUSettings = field(default_factory=OUSettings)
    tolerances: Dict[str, float] = field(default_factory=dict)
    schema: str = SCHEMA_VERSION
    source_path: Optional[str] = None

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))
