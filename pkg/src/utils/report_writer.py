"""Writers for report tables, JSON summaries and gnuplot-ready data files.

Floats are written with 17 significant digits and a '.' decimal point regardless of
locale, so identical runs produce byte-identical files. CSV files start with ``#``
comment lines carrying the grid, tolerance and seed the numbers were produced with.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from core.grid import TensorGrid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SPECTRUM_COLUMNS = ("n", "sigma", "mu", "lambda", "gap", "residual", "converged")
NODAL_COLUMNS = ("epsilon", "n", "kind", "s", "t", "distance")


def format_value(value: Any) -> str:
    """Locale-independent text for one table cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.17g" % value
    return str(value)


def header_lines(meta: Mapping[str, Any]) -> List[str]:
    return [f"# {key}={format_value(value)}" for key, value in meta.items()]


def _open(path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path, open(path, "w", encoding="utf-8", newline="")


def write_table(
    path: PathLike,
    records: Iterable[Mapping[str, Any]],
    columns: Sequence[str],
    meta: Optional[Mapping[str, Any]] = None,
) -> Path:
    """Write ``records`` as CSV with a reproducibility header."""
    path, f = _open(path)
    count = 0
    with f:
        for line in header_lines(meta or {}):
            f.write(line + "\n")
        writer = csv.DictWriter(
            f, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore"
        )
        writer.writeheader()
        for record in records:
            writer.writerow({key: format_value(record.get(key, "")) for key in columns})
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def write_spectrum_csv(path: PathLike, rows: Sequence[Any], meta: Mapping[str, Any]) -> Path:
    """Per-index eigenvalue table for one ε (rows are sweep rows)."""
    records = [
        {
            "n": row.n,
            "sigma": row.sigma,
            "mu": row.mu,
            "lambda": row.lambda_,
            "gap": row.gap_sigma,
            "residual": row.residual,
            "converged": row.converged,
        }
        for row in rows
    ]
    return write_table(path, records, SPECTRUM_COLUMNS, meta)


def nodal_records(epsilon: float, detail: Any) -> List[Dict[str, Any]]:
    """Zeros of φ_n and crossings of ψ_n along the s-lines, with their distances to 𝒩(φ_n)."""
    records: List[Dict[str, Any]] = []
    nodal = detail.nodal
    if nodal is None:
        return records
    for z in nodal.zeros:
        records.append(
            {
                "epsilon": epsilon,
                "n": detail.index,
                "kind": "phi_zero",
                "s": z,
                "t": "",
                "distance": 0.0,
            }
        )
    if detail.displacement is not None:
        for s, t in detail.displacement.crossings:
            records.append(
                {
                    "epsilon": epsilon,
                    "n": detail.index,
                    "kind": "psi_crossing",
                    "s": s,
                    "t": " ".join(format_value(x) for x in t),
                    "distance": float(nodal.distance(np.array([s]))[0]),
                }
            )
    return records


def write_nodal_csv(
    path: PathLike, records: Sequence[Mapping[str, Any]], meta: Mapping[str, Any]
) -> Path:
    return write_table(path, records, NODAL_COLUMNS, meta)


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    return value


def write_summary_json(path: PathLike, summary: Mapping[str, Any]) -> Path:
    """JSON summary; NaN and infinities become null."""
    path, f = _open(path)
    with f:
        json.dump(_json_safe(dict(summary)), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote summary to {path}")
    return path


def write_field_table(
    path: PathLike,
    grid: TensorGrid,
    field: np.ndarray,
    meta: Optional[Mapping[str, Any]] = None,
    label: str = "value",
) -> Path:
    """Grid field as ``s t... value`` lines, one blank line between s-blocks (gnuplot ``splot``)."""
    field = np.asarray(field, dtype=float).reshape(grid.shape)
    t_names = [f"t{mu + 2}" for mu in range(len(grid.t_shape))]
    path, f = _open(path)
    with f:
        for line in header_lines(meta or {}):
            f.write(line + "\n")
        f.write("# s " + " ".join(t_names) + f" {label}\n")
        for i, s in enumerate(grid.s_nodes):
            for j in np.ndindex(*grid.t_shape):
                t = [axis[k] for axis, k in zip(grid.t_axes, j)]
                values = [s, *t, field[(i,) + j]]
                f.write(" ".join(format_value(float(v)) for v in values) + "\n")
            f.write("\n")
    logger.debug(f"Wrote field table {path}")
    return path


def write_curve_table(
    path: PathLike,
    s: np.ndarray,
    columns: Mapping[str, np.ndarray],
    meta: Optional[Mapping[str, Any]] = None,
) -> Path:
    """Columns over the s-nodes, whitespace separated (gnuplot ``plot ... using 1:k``)."""
    names = list(columns)
    path, f = _open(path)
    with f:
        for line in header_lines(meta or {}):
            f.write(line + "\n")
        f.write("# s " + " ".join(names) + "\n")
        for i, s_i in enumerate(np.asarray(s, dtype=float)):
            values = [s_i] + [float(np.asarray(columns[name])[i]) for name in names]
            f.write(" ".join(format_value(v) for v in values) + "\n")
    logger.debug(f"Wrote curve table {path}")
    return path
