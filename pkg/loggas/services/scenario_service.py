import csv
import logging
from typing import Optional

import numpy as np

from ..exceptions import ConfigError
from ..models.density import EquilibriumDensity, TabulatedDensity
from ..models.grid import GridFunction
from ..models.potential import PotentialFamily
from ..models.scenario import InitialKind, Scenario
from .hydro_service import scaling_solution
from .potential_service import equilibrium_density, scaled_semicircle

logger = logging.getLogger(__name__)


def load_tabulated(path: str, beta: float) -> TabulatedDensity:
    """Read a two-column (x, rho) CSV; a header row is skipped"""
    xs, values = [], []
    with open(path, 'r', newline='') as f:
        for row in csv.reader(f):
            if not row or row[0].startswith('#'):
                continue
            try:
                xs.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError:
                if xs:
                    raise ConfigError(f"Malformed row in tabulated density {path}: {row}")
    grid = GridFunction(np.array(xs), np.array(values))
    if not grid.is_uniform(rtol=1e-6):
        raise ConfigError(f"Tabulated density {path} must be on a uniform grid")
    if np.any(grid.values < 0):
        raise ConfigError(f"Tabulated density {path} has negative values")
    return TabulatedDensity(grid, beta)


def initial_density(scenario: Scenario):
    """Density descriptor at t=0"""
    spec = scenario.initial
    if spec.kind is InitialKind.SCALED_SEMICIRCLE:
        return scaled_semicircle(scenario.beta, spec.s0)
    if spec.kind is InitialKind.EQUILIBRIUM:
        return equilibrium_density(scenario.potential, scenario.beta)
    return load_tabulated(spec.path, scenario.beta)


def reference_density(scenario: Scenario, t: float) -> Optional[EquilibriumDensity]:
    """Closed-form hydrodynamic density at time t, when one is known"""
    spec = scenario.initial
    family = scenario.potential.family
    if spec.kind is InitialKind.EQUILIBRIUM and family is not PotentialFamily.GENERAL:
        return equilibrium_density(scenario.potential, scenario.beta)
    if spec.kind is InitialKind.SCALED_SEMICIRCLE and family is PotentialFamily.HARMONIC:
        return scaled_semicircle(scenario.beta, scaling_solution(spec.s0, t))
    logger.debug(f"No closed-form density at t={t} for scenario {scenario.name}")
    return None
