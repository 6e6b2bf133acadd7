"""CSV tables, JSON manifests and error records"""

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import APP_NAME, APP_VERSION, RunConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
# keys that do not change results and stay out of the config hash
_RUNTIME_KEYS = ("output_dir", "threads", "log_level")

Column = Tuple[str, str]


@dataclass
class Table:
    columns: List[Column]
    rows: List[Sequence]

    @property
    def header(self) -> List[str]:
        return [f"{name} [{unit}]" for name, unit in self.columns]


@dataclass
class ExperimentResult:
    """Everything an experiment produces, before it touches the disk"""

    experiment: str
    L: int
    sector: str
    table: Table
    extra_tables: Dict[str, Table] = field(default_factory=dict)
    summary: Dict[str, object] = field(default_factory=dict)
    dim: Optional[int] = None


def config_hash(config: RunConfig) -> str:
    payload = {k: v for k, v in config.as_dict().items() if k not in _RUNTIME_KEYS}
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:10]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def write_table(table: Table, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    return path


def result_stem(result: ExperimentResult, config: RunConfig) -> str:
    """<experiment>_<L>_<sector>_<hash of config>"""
    return f"{result.experiment}_{result.L}_{result.sector}_{config_hash(config)}"


def emit_plot_data(result: ExperimentResult, config: RunConfig, out_dir) -> List[Path]:
    """Write the main table and any extra tables; file names are deterministic"""
    out_dir = Path(out_dir)
    stem = result_stem(result, config)
    paths = [write_table(result.table, out_dir / f"{stem}.csv")]
    for suffix, table in sorted(result.extra_tables.items()):
        paths.append(write_table(table, out_dir / f"{stem}_{suffix}.csv"))
    for path in paths:
        logger.info(f"Wrote {path}")
    return paths


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    return str(value)


def write_manifest(result: ExperimentResult, config: RunConfig, out_dir, files: List[Path], wall_time: float) -> Path:
    manifest = {
        "schema": f"{APP_NAME}/manifest/1",
        "app": APP_NAME,
        "version": APP_VERSION,
        "experiment": result.experiment,
        "config_hash": config_hash(config),
        "config": config.as_dict(),
        "L": result.L,
        "sector": result.sector,
        "D_sec": result.dim,
        "wall_time_s": round(wall_time, 3),
        "files": [Path(p).name for p in files],
        "columns": {Path(files[0]).name: result.table.header},
        "summary": result.summary,
    }
    path = Path(out_dir) / f"{result_stem(result, config)}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable), encoding="utf-8")
    return path


def error_record(error: Exception, exit_code: int, experiment: Optional[str] = None) -> dict:
    return {
        "status": "error",
        "error_type": type(error).__name__,
        "message": str(error),
        "exit_code": exit_code,
        "experiment": experiment,
    }


def write_error_record(record: dict, out_dir) -> Optional[Path]:
    try:
        path = Path(out_dir) / "error.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record, indent=2), encoding="utf-8")
        return path
    except OSError as e:
        logger.error(f"Could not write error record: {e}")
        return None
