"""
Output handler for report JSON and sequence CSV files.

Reports are written with sorted keys and round-trip float precision so that
identical runs give byte-identical files when the meta block is disabled.
"""
import csv
import json
import logging
import math
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .. import __version__
from ..core.series import TruncatedSeries

logger = logging.getLogger(__name__)

NONFINITE = {math.inf: "Infinity", -math.inf: "-Infinity"}


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, enums and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "NaN"
        return NONFINITE.get(value, value)
    if isinstance(value, Enum):
        return to_jsonable(value.value)
    return value


def format_real(x: float) -> str:
    return format(float(x), ".17g")


class OutputHandler:
    """Writes reports and CSVs under one output directory."""

    def __init__(self, output_dir: str = "./shiftlab_output", include_meta: bool = True):
        """
        Args:
            output_dir: directory for every file of the run (created on demand)
            include_meta: add {"generated_at", "version"} to JSON reports
        """
        self.output_dir = Path(output_dir)
        self.include_meta = include_meta
        self.written: List[str] = []

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        data = to_jsonable(payload)
        if self.include_meta:
            data["meta"] = {
                "generated_at": datetime.now(timezone.utc).isoformat(),
                "version": __version__,
            }
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(json.dumps(data, indent=2, sort_keys=True, allow_nan=False))
                f.write("\n")
        except Exception as e:
            logger.error(f"Failed to write {path}: {e}")
            raise
        self.written.append(name)
        logger.info(f"Report saved to {path}")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self._path(name)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_real(v) if isinstance(v, (float, np.floating)) else v for v in row])
        self.written.append(name)
        logger.debug(f"CSV saved to {path}")
        return path

    def read_csv(self, name: str) -> Tuple[List[str], List[List[str]]]:
        with open(self.output_dir / name, 'r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f)
            header = next(reader)
            return header, [row for row in reader]


# Typed row helpers

SERIES_HEADER = ("n", "coeff")
W_HEADER = ("n", "w_n", "delta_n")
EIGEN_HEADER = ("t", "x")
ORBIT_HEADER = ("k", "t", "label")
SOLUTION_HEADER = ("t", "y", "layer")


def series_to_rows(s: TruncatedSeries) -> List[Tuple[int, float]]:
    return [(n, float(c)) for n, c in enumerate(s.coeffs)]


def series_from_rows(rows: Sequence[Sequence[str]], center: float = 0.0) -> TruncatedSeries:
    ordered = sorted(rows, key=lambda r: int(r[0]))
    if [int(r[0]) for r in ordered] != list(range(len(ordered))):
        raise ValueError("series rows must cover n = 0..N without gaps")
    return TruncatedSeries(center, np.array([float(r[1]) for r in ordered]))


def w_rows(diag) -> List[Tuple[int, float, float]]:
    return diag.rows()


def eigen_rows(x) -> List[Tuple[float, float]]:
    return [(float(t), float(v)) for t, v in zip(x.nodes, x.samples)]


def orbit_rows(points) -> List[Tuple[int, float, str]]:
    return [(p.k, float(p.t), p.label.value) for p in points]


def solution_rows(solution) -> List[Tuple[float, float, int]]:
    return solution.rows()


def summarize_written(handler: OutputHandler, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    out = {"output_dir": str(handler.output_dir), "files": sorted(handler.written)}
    if extra:
        out.update(extra)
    return out
