"""
CSV/JSON export of run results plus the sibling provenance file
"""
import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from settings import VERSION

logger = logging.getLogger(__name__)

PROFILE_HEADER = ['x', 'U', 'Ux', 'Uxx', 'residual']
STEADY_HEADER = ['x', 'u_newton', 'U_composite', 'diff']
SPECTRUM_HEADER = ['eps', 'index', 'lambda']
EVOLVE_HEADER = ['t', 'deviation']


def sweep_header(m: int) -> List[str]:
    return ['eps'] + [f'lambda{j}' for j in range(1, m + 1)]


def format_value(value) -> str:
    """Floats with 17 significant digits; integers and text unchanged"""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def _plain(obj):
    """numpy scalars and arrays to JSON-native types"""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def meta_path(out_path: str) -> Path:
    """<out>.meta.json next to the output file"""
    p = Path(out_path)
    return p.with_name(p.name + '.meta.json')


class ResultsWriter:
    """Writes exactly one result file and its provenance record"""

    def __init__(self, out_path: str, fmt: str = 'csv'):
        """
        Initialize Results Writer

        Args:
            out_path: Result file path
            fmt: 'csv' or 'json'
        """
        self.out_path = Path(out_path)
        self.fmt = fmt
        self.out_path.parent.mkdir(parents=True, exist_ok=True)

    def write_table(self, header: Sequence[str], rows: Iterable[Sequence]) -> int:
        """
        Write a table as CSV, or as a JSON list of records when fmt is json

        Returns:
            int: Number of data rows written
        """
        rows = [list(r) for r in rows]
        if self.fmt == 'json':
            records = [dict(zip(header, r)) for r in rows]
            self.write_json({'columns': list(header), 'rows': records})
            return len(rows)

        with open(self.out_path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
        logger.info(f"✓ Wrote {len(rows)} rows to {self.out_path}")
        return len(rows)

    def write_json(self, payload: dict):
        with open(self.out_path, 'w', encoding='utf-8') as f:
            json.dump(_plain(payload), f, indent=2, sort_keys=True)
            f.write('\n')
        logger.info(f"✓ Wrote {self.out_path}")

    def write_meta(self, config: dict, wall_time: float, started: Optional[datetime] = None):
        """
        Provenance record: configuration, artifact version, wall time

        Args:
            config: Effective run configuration
            wall_time: Seconds spent in the run
            started: Start timestamp (now when None)
        """
        started = started or datetime.now(timezone.utc)
        record = {
            'version': VERSION,
            'output': str(self.out_path),
            'format': self.fmt,
            'config': config,
            'started': started.isoformat(),
            'wall_time_seconds': round(float(wall_time), 6),
        }
        path = meta_path(str(self.out_path))
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_plain(record), f, indent=2, sort_keys=True, default=str)
            f.write('\n')
        logger.debug(f"Provenance written to {path}")
