import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import click
import numpy as np
from tabulate import tabulate

logger = logging.getLogger(__name__)


def format_value(value) -> str:
    """17 significant digits for floats so reruns can be compared byte for byte"""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    if value is None:
        return ''
    return str(value)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    if hasattr(value, 'value') and hasattr(value, 'name'):
        return value.value
    return value


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def write_json(path, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(_plain(payload), f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f"Wrote {path}")
    return path


def write_table(out_dir, stem: str, fmt: str, header: Sequence[str], rows: Sequence[Sequence[Any]],
                extra: Optional[Dict[str, Any]] = None) -> Path:
    """Write rows as `stem.csv`, or as a JSON object of records when fmt is json"""
    out_dir = Path(out_dir)
    if fmt == 'json':
        payload = dict(extra or {})
        payload['columns'] = list(header)
        payload['rows'] = [list(row) for row in rows]
        return write_json(out_dir / f"{stem}.json", payload)
    return write_csv(out_dir / f"{stem}.csv", header, rows)


def echo_table(header: Sequence[str], rows: Sequence[Sequence[Any]], limit: Optional[int] = 20) -> None:
    shown = list(rows) if limit is None else list(rows)[:limit]
    click.echo(tabulate(shown, headers=list(header), tablefmt='simple', floatfmt='.8g'))
    if limit is not None and len(rows) > limit:
        click.echo(f"... {len(rows) - limit} more rows")
