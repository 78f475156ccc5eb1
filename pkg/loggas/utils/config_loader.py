import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import click
import yaml

from ..exceptions import ConfigError
from ..models.hydro import Closure
from ..models.scenario import (SCHEMA_VERSION, HydroSettings, InitialKind, InitialSpec, KernelSettings,
                               OUSettings, Scenario, SdeSettings, StartMode)
from ..services.potential_service import build_potential

logger = logging.getLogger(__name__)

DEFAULT_SCENARIO = {
    'schema': SCHEMA_VERSION,
    'name': 'hermite-scaling',
    'potential': {'coeffs': [0.0, 0.0, 0.5], 'alpha': 1.0},
    'beta': 2.0,
    'initial': {'kind': 'scaled_semicircle', 's0': 2.0},
    'horizon': 1.0,
    'times': [0.25, 0.5, 0.75, 1.0],
    'seed': 20240501,
    'output_dir': 'out',
    'sde': {'n_particles': 50, 'dt': 1e-3, 'replicas': 200, 'start': 'quantile', 'radius': 10.0},
    'hydro': {'closure': 'freeze', 'order': 12, 'n_real': 24, 'n_imag': 16, 'imag_max': 5.0,
              'rtol': 1e-10, 'atol': 1e-12},
    'kernel': {'x1': 0.3, 'x2': -0.4, 't1': 0.5, 't2': 0.0},
    'ou': {'max_mode': 32, 'dt': 1e-3, 't_end': 5.0, 'replicas': 200, 'lag': 0.5},
    'tolerances': {'edge': 1e-4, 'hydro': 1e-6, 'kernel_pde': 1e-6},
}


def search_paths():
    return [
        Path.cwd() / 'scenario.json',
        Path.cwd() / 'scenario.yml',
        Path.cwd() / 'scenario.yaml',
        Path.home() / '.config' / 'loggas' / 'scenario.json',
        Path.home() / '.config' / 'loggas' / 'scenario.yml',
    ]


def _read(path: Path) -> Dict[str, Any]:
    try:
        with open(path, 'r') as f:
            if path.suffix.lower() in ('.yml', '.yaml'):
                raw = yaml.safe_load(f)
            else:
                raw = json.load(f)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not read scenario {path}: {e}")
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(f"Empty or malformed scenario file at {path}")
    return raw


def _section(raw: Dict, name: str) -> Dict:
    section = raw.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Scenario section '{name}' must be a mapping")
    return section


def _build(cls, values: Dict, section: str, converters: Optional[Dict] = None):
    known = set(cls.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {', '.join(sorted(unknown))}")
    converted = dict(values)
    for key, convert in (converters or {}).items():
        if key in converted:
            try:
                converted[key] = convert(converted[key])
            except ValueError as e:
                raise ConfigError(f"Invalid value for {section}.{key}: {e}")
    return cls(**converted)


def parse_scenario(raw: Dict[str, Any], source: Optional[str] = None) -> Scenario:
    """Normalize and validate a scenario mapping"""
    schema = raw.get('schema', SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"Unsupported scenario schema '{schema}', expected '{SCHEMA_VERSION}'")

    beta = float(raw.get('beta', 2.0))
    if beta < 1:
        raise ConfigError("beta ≥ 1 required")

    potential_cfg = _section(raw, 'potential')
    if 'coeffs' not in potential_cfg:
        raise ConfigError("Scenario 'potential' must include 'coeffs'")
    sde = _build(SdeSettings, _section(raw, 'sde'), 'sde', {'start': StartMode})
    try:
        potential = build_potential(potential_cfg['coeffs'], float(potential_cfg.get('alpha', 0.0)),
                                    radius=sde.radius)
    except ValueError as e:
        raise ConfigError(f"Invalid potential: {e}")

    initial = _build(InitialSpec, _section(raw, 'initial'), 'initial', {'kind': InitialKind})
    if initial.kind is InitialKind.SCALED_SEMICIRCLE and initial.s0 <= 0:
        raise ConfigError("initial.s0 must be positive")
    if initial.kind is InitialKind.TABULATED:
        if not initial.path:
            raise ConfigError("Tabulated initial density needs 'path'")
        path = Path(initial.path)
        if not path.is_absolute() and source:
            path = Path(source).parent / path
        if not path.exists():
            raise ConfigError(f"Tabulated density file not found: {path}")
        initial = InitialSpec(initial.kind, initial.s0, str(path))

    hydro_cfg = dict(_section(raw, 'hydro'))
    if 'density_eps' in hydro_cfg:
        hydro_cfg['density_eps'] = tuple(hydro_cfg['density_eps'])
    hydro = _build(HydroSettings, hydro_cfg, 'hydro', {'closure': Closure})
    kernel_cfg = dict(_section(raw, 'kernel'))
    if 'eps' in kernel_cfg:
        kernel_cfg['eps'] = tuple(kernel_cfg['eps'])
    kernel = _build(KernelSettings, kernel_cfg, 'kernel')
    ou = _build(OUSettings, _section(raw, 'ou'), 'ou')

    horizon = float(raw.get('horizon', 1.0))
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    times = tuple(float(t) for t in raw.get('times', [horizon]))
    if any(t < 0 or t > horizon for t in times):
        raise ConfigError("sample times must lie in [0, horizon]")
    if sde.n_particles < 1:
        raise ConfigError("sde.n_particles must be at least 1")
    if sde.dt <= 0 or sde.dt_min <= 0:
        raise ConfigError("sde.dt and sde.dt_min must be positive")
    tolerances = {str(k): float(v) for k, v in _section(raw, 'tolerances').items()}
    if any(v <= 0 for v in tolerances.values()):
        raise ConfigError("All tolerances must be positive")

    return Scenario(name=str(raw.get('name', 'scenario')), potential=potential, beta=beta,
                    initial=initial, horizon=horizon, times=times, seed=int(raw.get('seed', 0)),
                    output_dir=str(raw.get('output_dir', 'out')), sde=sde, hydro=hydro, kernel=kernel,
                    ou=ou, tolerances=tolerances, schema=schema, source_path=source)


def load_scenario(path=None) -> Scenario:
    """Load a scenario from `path` or the first file found on the search path"""
    if path:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Scenario file not found: {path}")
        return parse_scenario(_read(path), str(path))
    for candidate in search_paths():
        if candidate.exists():
            logger.info(f"Loading scenario from {candidate}")
            return parse_scenario(_read(candidate), str(candidate))
    locations = "\n - ".join(str(p) for p in search_paths())
    raise ConfigError(f"No scenario file found. Looked in:\n - {locations}\n"
                      f"Run 'loggas config create' to write a template.")


def create_default_scenario(path=None, overwrite: bool = False) -> Optional[Path]:
    """Write the template scenario; JSON unless the suffix asks for YAML"""
    path = Path(path) if path else Path.cwd() / 'scenario.json'
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and not overwrite:
        click.echo(f"Scenario file already exists at {path}")
        if not click.confirm("Do you want to overwrite it?", default=False):
            click.echo("Operation cancelled.")
            return None
    with open(path, 'w') as f:
        if path.suffix.lower() in ('.yml', '.yaml'):
            yaml.safe_dump(DEFAULT_SCENARIO, f, default_flow_style=False, sort_keys=False)
        else:
            json.dump(DEFAULT_SCENARIO, f, indent=2)
            f.write('\n')
    return path
